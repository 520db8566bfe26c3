use super::*;
use approx::assert_relative_eq;
use proptest::prelude::*;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    // endpoints nudged inward so one-sided limits are used at jumps
    let eps = 1e-13 * (b - a);
    let mut s = f(a + eps) + f(b - eps);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Piecewise Simpson with breakpoints, for integrands with kinks.
fn integrate(f: impl Fn(f64) -> f64, breaks: &[f64], lo: f64, hi: f64) -> f64 {
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.windows(2)
        .map(|w| simpson(&f, w[0], w[1], 4000.max(((w[1] - w[0]) * 400.0) as usize)))
        .sum()
}

fn f1(k: f64) -> Expr {
    Expr::exp_abs(1.0 / (2.0 * k), k, 0.0)
}

#[test]
fn derivative_of_f1() {
    let k = 2.0;
    let d = f1(k).differentiate().unwrap();
    let expected = Expr::term(BasisTerm::ExpAbs {
        coeff: -0.5,
        power: 0,
        sign: true,
        decay: k,
        center: 0.0,
    });
    assert_eq!(d, expected);
}

#[test]
fn second_derivative_of_f1_has_delta() {
    for &k in &[1.0, 2.0, 0.5] {
        let d2 = f1(k).differentiate_n(2).unwrap();
        let expected = Expr::delta(-1.0, 0.0).add(&f1(k).scale(k * k));
        assert_eq!(d2, expected);
        // D^2 F1 - k^2 F1 = -δ
        let resid = d2.sub(&f1(k).scale(k * k));
        assert_eq!(resid, Expr::delta(-1.0, 0.0));
    }
}

#[test]
fn constants_and_deltas() {
    assert!(Expr::zero().differentiate().unwrap().is_zero());
    assert_eq!(Expr::delta(1.0, 0.0).differentiate(), Err(Error::DeltaDerivative));
}

#[test]
fn shift_examples() {
    assert_eq!(Expr::delta(1.0, 0.0).shift(2.5), Expr::delta(1.0, 2.5));
    let e = f1(1.3).add(&Expr::delta(0.2, -1.0));
    assert_eq!(e.shift(0.75).shift(-0.75), e);
    assert_eq!(Expr::exp_abs(1.0, 1.0, 0.0).shift(1.0).value(1.0), 1.0);
}

#[test]
fn canonical_form_merges_and_drops() {
    let a = Expr::exp_abs(1.0, 1.0, 0.0);
    assert!(a.sub(&a).is_zero());
    let b = a.add(&a);
    assert_eq!(b.len(), 1);
    assert_eq!(b.terms()[0].coeff(), 2.0);
    let near = Expr::exp_abs(1.0, 1.0 + f64::EPSILON, 0.0);
    assert_eq!(a.add(&near).len(), 2);
    // ordering does not depend on insertion order
    let x = Expr::delta(1.0, 2.0).add(&a);
    let y = a.add(&Expr::delta(1.0, 2.0));
    assert_eq!(x, y);
}

#[test]
fn evaluate_examples() {
    assert_eq!(f1(2.0).value(0.0), 0.25);
    let ev = Expr::delta(1.0, 1.0).evaluate(3.0);
    assert_eq!(ev.value, 0.0);
    assert_eq!(
        ev.atoms,
        vec![Atom {
            weight: 1.0,
            center: 1.0
        }]
    );
    // erfc(p u + q) with p < 0 tends to 2 as u -> +inf
    let t = Expr::term(BasisTerm::ErfcExp {
        coeff: 1.0,
        power: 0,
        rate: 0.0,
        slope: -1.0,
        offset: 0.3,
        center: 0.0,
    });
    assert_relative_eq!(t.value(1e3), 2.0);
    assert_eq!(t.value(-1e3), 0.0);
}

#[test]
fn evaluation_is_bitwise_deterministic() {
    let e = f1(1.0)
        .convolve_gaussian(0.3)
        .unwrap()
        .add(&Expr::exp_abs(0.3, 2.0, 1.0));
    for &x in &[-3.0, 0.1, 2.0] {
        assert_eq!(e.value(x).to_bits(), e.clone().value(x).to_bits());
    }
}

#[test]
fn gaussian_of_delta_is_normal_density() {
    let v = 0.7;
    let e = Expr::delta(1.0, 0.0).convolve_gaussian(v).unwrap();
    for &x in &[-2.0, 0.0, 0.4, 3.0] {
        assert_relative_eq!(e.value(x), special::normal_pdf(x, v), max_relative = 1e-15);
    }
    assert!(Expr::delta(1.0, 0.0).convolve_gaussian(0.0).is_err());
    assert!(e.convolve_gaussian(0.1).is_ok());
}

fn exp_abs_term(c: f64, m: u32, sign: bool, k: f64, center: f64) -> Expr {
    Expr::term(BasisTerm::ExpAbs {
        coeff: c,
        power: m,
        sign,
        decay: k,
        center,
    })
}

fn check_gauss_conv(e: &Expr, v: f64, breaks: &[f64]) {
    let conv = e.convolve_gaussian(v).unwrap();
    for &x in &[-4.0, -1.3, -0.2, 0.0, 0.35, 1.0, 2.7, 5.0] {
        let q = integrate(|s| e.value(s) * special::normal_pdf(x - s, v), breaks, -40.0, 40.0);
        assert!(
            (conv.value(x) - q).abs() < 1e-8,
            "x={x} closed={} quad={q} expr={e:?}",
            conv.value(x)
        );
    }
}

#[test]
fn gaussian_convolution_matches_quadrature() {
    for m in 0..4 {
        for &sign in &[false, true] {
            let e = exp_abs_term(0.8, m, sign, 1.3, 0.4);
            check_gauss_conv(&e, 0.45, &[0.4]);
        }
    }
    let g = Expr::term(BasisTerm::Gauss {
        coeff: 1.1,
        power: 3,
        quad: -0.8,
        lin: 0.5,
        center: -0.3,
    });
    check_gauss_conv(&g, 0.3, &[]);
}

#[test]
fn convolution_preserves_mass() {
    let e = f1(1.0)
        .add(&exp_abs_term(0.3, 2, false, 2.0, 1.0))
        .add(&Expr::delta(0.25, -2.0));
    let m0 = e.integrate_line().unwrap();
    let m1 = e.convolve_gaussian(0.6).unwrap().integrate_line().unwrap();
    assert_relative_eq!(m0, m1, max_relative = 1e-13);
}

#[test]
fn laplace_convolution_matches_quadrature() {
    let k = 1.4;
    let lap = |z: f64| 0.5 * k * (-k * z.abs()).exp();
    for m in 0..4 {
        for &sign in &[false, true] {
            let e = exp_abs_term(1.0, m, sign, k, 0.2);
            let conv = e.convolve_laplace(k).unwrap();
            for &x in &[-3.0, -0.5, 0.2, 0.9, 4.0] {
                let q = integrate(|s| e.value(s) * lap(x - s), &[0.2, x], -60.0, 60.0);
                assert!(
                    (conv.value(x) - q).abs() < 1e-9,
                    "m={m} sign={sign} x={x}: {} vs {q}",
                    conv.value(x)
                );
            }
        }
    }
    let d = Expr::delta(2.0, 1.0).convolve_laplace(k).unwrap();
    assert_relative_eq!(d.value(1.5), 2.0 * lap(0.5));
    assert!(exp_abs_term(1.0, 0, false, 2.0, 0.0).convolve_laplace(1.0).is_err());
}

#[test]
fn indicator_convolution_matches_quadrature() {
    let (lo, hi) = (-0.7, 0.4);
    for m in 0..4 {
        for &sign in &[false, true] {
            let e = exp_abs_term(1.3, m, sign, 1.1, 0.2);
            let conv = e.convolve_indicator(lo, hi).unwrap();
            assert!(conv.has_steps());
            for &x in &[-3.0, -0.35, 0.0, 0.31, 0.9, 4.0] {
                let q = integrate(|s| e.value(x - s), &[x - 0.2], lo, hi);
                assert!(
                    (conv.value(x) - q).abs() < 1e-10,
                    "m={m} sign={sign} x={x}: {} vs {q}",
                    conv.value(x)
                );
            }
            let mass = conv.integrate_line().unwrap();
            assert!((mass - (hi - lo) * e.integrate_line().unwrap()).abs() < 1e-12);
        }
    }
    let b = Expr::delta(2.0, 1.0).convolve_indicator(lo, hi).unwrap();
    assert_eq!(b.value(1.0), 2.0);
    assert_eq!(b.value(1.0 + hi), 1.0);
    assert_eq!(b.value(2.0), 0.0);
    assert!(b.convolve_indicator(0.0, 1.0).is_err());
    assert!(Expr::delta(1.0, 0.0).convolve_indicator(1.0, 0.0).is_err());
}

#[test]
fn integrals() {
    let k = 1.7;
    assert_relative_eq!(f1(k).integrate_line().unwrap(), 1.0 / (k * k), max_relative = 1e-15);
    assert_eq!(Expr::delta(1.0, 3.0).integrate_line().unwrap(), 1.0);
    let lap = Expr::exp_abs(0.5 * k, k, 0.0);
    assert_relative_eq!(lap.integrate_line().unwrap(), 1.0, max_relative = 1e-15);
    let m = lap.moments().unwrap();
    assert_eq!(m.first, 0.0);
    assert_relative_eq!(m.second, 2.0 / (k * k), max_relative = 1e-14);
    assert_eq!(m.mass, lap.integrate_line().unwrap());
    assert!(lap.moment(3).is_err());
}

fn sample_terms() -> Vec<Expr> {
    vec![
        exp_abs_term(0.7, 0, false, 1.2, 0.3),
        exp_abs_term(0.7, 1, true, 1.2, -0.3),
        exp_abs_term(-0.4, 3, false, 0.9, 0.5),
        exp_abs_term(0.4, 2, true, 2.0, 0.0),
        Expr::term(BasisTerm::Gauss {
            coeff: 0.9,
            power: 2,
            quad: -0.6,
            lin: 0.4,
            center: 0.2,
        }),
        Expr::term(BasisTerm::ErfcExp {
            coeff: 0.5,
            power: 1,
            rate: -1.1,
            slope: -0.8,
            offset: 0.3,
            center: 0.1,
        }),
        Expr::term(BasisTerm::ErfcExp {
            coeff: 0.5,
            power: 2,
            rate: 1.1,
            slope: 0.8,
            offset: 0.3,
            center: -0.1,
        }),
        Expr::term(BasisTerm::Step {
            coeff: 1.3,
            power: 1,
            orientation: 1,
            rate: -0.9,
            threshold: 0.5,
        }),
        Expr::term(BasisTerm::Step {
            coeff: 0.6,
            power: 0,
            orientation: -1,
            rate: 1.5,
            threshold: -0.5,
        }),
    ]
}

#[test]
fn closed_form_integrals_match_quadrature() {
    for e in sample_terms() {
        let c = e.terms()[0].center();
        let q = integrate(|s| e.value(s), &[c], -80.0, 80.0);
        let exact = e.integrate_line().unwrap();
        assert!((exact - q).abs() < 1e-9, "{e:?}: {exact} vs {q}");
        let q1 = integrate(|s| s * e.value(s), &[c], -80.0, 80.0);
        let q2 = integrate(|s| s * s * e.value(s), &[c], -80.0, 80.0);
        assert!((e.moment(1).unwrap() - q1).abs() < 1e-9);
        assert!((e.moment(2).unwrap() - q2).abs() < 1e-9);
    }
}

#[test]
fn cdf_matches_quadrature() {
    for e in sample_terms() {
        let c = e.terms()[0].center();
        for &x in &[-2.0, -0.4, c, 0.7, 3.0] {
            let q = integrate(|s| e.value(s), &[c], -80.0, x);
            let v = e.cdf(x).unwrap();
            assert!((v - q).abs() < 1e-9, "{e:?} at {x}: {v} vs {q}");
        }
        assert_relative_eq!(
            e.cdf(f64::INFINITY).unwrap(),
            e.integrate_line().unwrap(),
            max_relative = 1e-12,
            epsilon = 1e-15
        );
    }
}

#[test]
fn unit_steps_need_cancellation() {
    let box_ = Expr::from_terms(vec![
        BasisTerm::Step {
            coeff: 1.0,
            power: 0,
            orientation: 1,
            rate: 0.0,
            threshold: -1.0,
        },
        BasisTerm::Step {
            coeff: -1.0,
            power: 0,
            orientation: 1,
            rate: 0.0,
            threshold: 1.5,
        },
    ]);
    assert_relative_eq!(box_.integrate_line().unwrap(), 2.5);
    assert_relative_eq!(box_.moment(1).unwrap(), (1.5f64 * 1.5 - 1.0) / 2.0);
    assert_relative_eq!(box_.moment(2).unwrap(), (1.5f64.powi(3) + 1.0) / 3.0);
    assert_relative_eq!(box_.cdf(0.0).unwrap(), 1.0);
    assert_eq!(box_.value(0.0), 1.0);
    assert_eq!(box_.value(-1.0), 0.5);
    let half = Expr::term(box_.terms()[0]);
    assert!(half.integrate_line().is_err());
    assert!(box_.differentiate().is_err());
}

#[test]
fn derivatives_match_finite_differences() {
    for e in sample_terms() {
        if e.has_steps() {
            continue;
        }
        let d = e.differentiate().unwrap();
        let c = e.terms()[0].center();
        for &x in &[-1.7, -0.35, 0.8, 2.2] {
            if (x - c).abs() < 1e-2 {
                continue;
            }
            let h = 1e-5;
            let fd = (e.value(x + h) - e.value(x - h)) / (2.0 * h);
            assert!((d.value(x) - fd).abs() < 1e-7, "{e:?} at {x}");
        }
    }
}

#[test]
fn multiply_monomial_pointwise() {
    for e in sample_terms() {
        let p = e.multiply_monomial(2);
        for &x in &[-1.2, 0.33, 2.0] {
            assert_relative_eq!(p.value(x), x * x * e.value(x), max_relative = 1e-12, epsilon = 1e-14);
        }
    }
    let d = Expr::delta(2.0, 3.0).multiply_monomial(2);
    assert_eq!(d, Expr::delta(18.0, 3.0));
}

#[test]
fn json_roundtrip() {
    let e = f1(1.0).convolve_gaussian(0.5).unwrap().add(&Expr::delta(0.3, 1.0));
    let s = serde_json::to_string(&e).unwrap();
    assert!(s.contains("\"kind\":\"erfc_exp\""));
    let back: Expr = serde_json::from_str(&s).unwrap();
    assert_eq!(back, e);
    let bad = r#"{"terms":[{"kind":"exp_abs","coeff":1,"power":0,"sign":false,"decay":-1,"center":0}]}"#;
    assert!(serde_json::from_str::<Expr>(bad).is_err());
}

fn arb_exp_abs() -> impl Strategy<Value = Expr> {
    (-2.0f64..2.0, 0u32..4, any::<bool>(), 0.3f64..3.0, -2.0f64..2.0)
        .prop_map(|(c, m, s, k, x0)| exp_abs_term(c, m, s, k, x0))
}

fn arb_soup() -> impl Strategy<Value = Expr> {
    prop::collection::vec(arb_exp_abs(), 1..5).prop_map(|v| v.iter().fold(Expr::zero(), |acc, e| acc.add(e)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_commutes_with_derivative(e in arb_soup(), c in -3.0f64..3.0, x in -4.0f64..4.0) {
        let a = e.shift(c).differentiate().unwrap();
        let b = e.differentiate().unwrap().shift(c);
        prop_assert!((a.value(x) - b.value(x)).abs() <= 1e-12 * (1.0 + a.value(x).abs()));
        prop_assert_eq!(a.atoms().len(), b.atoms().len());
    }

    #[test]
    fn derivative_and_convolution_are_linear(a in arb_soup(), b in arb_soup(), s in -3.0f64..3.0, x in -4.0f64..4.0) {
        let lhs = a.add(&b.scale(s)).differentiate().unwrap();
        let rhs = a.differentiate().unwrap().add(&b.differentiate().unwrap().scale(s));
        prop_assert!((lhs.value(x) - rhs.value(x)).abs() <= 1e-11 * (1.0 + rhs.value(x).abs()));
        let lc = a.add(&b.scale(s)).convolve_gaussian(0.4).unwrap();
        let rc = a.convolve_gaussian(0.4).unwrap().add(&b.convolve_gaussian(0.4).unwrap().scale(s));
        prop_assert!((lc.value(x) - rc.value(x)).abs() <= 1e-11 * (1.0 + rc.value(x).abs()));
    }

    #[test]
    fn random_exp_abs_convolution(e in arb_exp_abs(), v in 0.05f64..2.0, x in -5.0f64..5.0) {
        let conv = e.convolve_gaussian(v).unwrap();
        let c = e.terms()[0].center();
        let q = integrate(|s| e.value(s) * special::normal_pdf(x - s, v), &[c], c - 40.0, c + 40.0);
        prop_assert!((conv.value(x) - q).abs() < 1e-8, "closed {} quad {}", conv.value(x), q);
    }
}
