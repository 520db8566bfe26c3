use super::*;
use approx::assert_relative_eq;

fn params(b: f64, beta: f64, sigma: f64, lambda: f64, k: f64) -> ModelParams {
    ModelParams::new(b, beta, sigma, lambda, k).unwrap()
}

#[test]
fn n1_value_at_origin() {
    let p = params(0.0, 1.0, 0.0, 2.0, 1.0);
    let r = fundamental_finite_sum(&p, 0.5, 0.0).unwrap();
    assert_relative_eq!(
        r.value(0.0).unwrap(),
        0.5 * (1.0 - (-1.0f64).exp()),
        max_relative = 1e-15
    );
    assert_relative_eq!(r.value(0.0).unwrap(), 0.316_060, epsilon = 1e-6);
    assert_relative_eq!(r.atom_weight, (-1.0f64).exp(), max_relative = 1e-15);
    assert_eq!(r.regular.len(), 1);
}

#[test]
fn time_zero_is_delta() {
    for n in 1..5 {
        let p = ModelParams::resonant(0.3, 1.2, 0.0, n, 1.5).unwrap();
        let r = fundamental_finite_sum(&p, 0.0, 0.7).unwrap();
        assert!(r.regular.is_zero());
        assert_eq!(r.atom_weight, 1.0);
        assert_eq!(r.atom_center, 0.7);
        let s = fundamental_series(&p, 0.0, 0.7, 1e-10, 64).unwrap();
        assert!(s.regular.is_zero());
        assert_eq!(s.atom_weight, 1.0);
    }
}

#[test]
fn rejects_non_integer_alpha_and_negative_time() {
    let p = params(0.0, 1.0, 0.0, 3.0, 1.0);
    assert_eq!(fundamental_finite_sum(&p, 1.0, 0.0), Err(Error::NonIntegerAlpha(1.5)));
    let p = params(0.0, 1.0, 0.0, 2.0, 1.0);
    assert!(matches!(
        fundamental_finite_sum(&p, -1.0, 0.0),
        Err(Error::NegativeTime(_))
    ));
}

/// Terms whose coefficient is pure cancellation noise; for these templates
/// the exact value is zero, which keeps float differentiation from seeing a
/// spurious delta.
fn drop_roundoff(e: &Expr) -> Expr {
    let scale = e.terms().iter().map(|t| t.coeff().abs()).fold(0.0, f64::max);
    Expr::from_terms(
        e.terms()
            .iter()
            .filter(|t| t.coeff().abs() > 1e-12 * scale)
            .cloned()
            .collect(),
    )
}

/// The literal binomial sum `Σ_j (-1)^j C(n,j) k^{2(n-j)} q^j D^{2j}[F_n]`
/// built with the term algebra's differentiation.
fn literal_finite_sum(p: &ModelParams, t: f64, y: f64, n: u32) -> Expr {
    let fnx = fn_expr(&p.with_sigma(0.0).unwrap(), t, n).unwrap();
    let q = (-2.0 * p.beta() * t).exp();
    let k = p.k();
    let mut acc = Expr::zero();
    let mut d = fnx;
    for j in 0..=n {
        let c = special::binom_real(f64::from(n), j) * k.powi(2 * (n - j) as i32) * q.powi(j as i32);
        let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc = acc.add(&d.scale(sgn * c));
        if j < n {
            d = drop_roundoff(&drop_roundoff(&d).differentiate().unwrap())
                .differentiate()
                .unwrap();
        }
    }
    acc.shift(p.singular_location(t, y).unwrap())
}

#[test]
fn mixture_equals_literal_binomial_sum() {
    for n in 1..6 {
        for &(beta, k, t) in &[(1.0, 1.0, 0.5), (0.5, 2.0, 1.3), (2.0, 0.7, 0.1)] {
            let p = ModelParams::resonant(0.4, beta, 0.0, n, k).unwrap();
            let r = fundamental_finite_sum(&p, t, -0.3).unwrap();
            let lit = literal_finite_sum(&p, t, -0.3, n);
            let atoms = lit.atoms();
            assert_eq!(atoms.len(), 1);
            assert_relative_eq!(atoms[0].weight, r.atom_weight, max_relative = 1e-12);
            assert_eq!(atoms[0].center, r.atom_center);
            for i in -40..=40 {
                let x = r.atom_center + 0.25 * f64::from(i) + 0.01;
                let a = r.value(x).unwrap();
                let b = lit.value(x);
                assert!((a - b).abs() < 1e-12 * (1.0 + k), "n={n} x={x}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn atom_weight_and_mass_grid() {
    for n in 1..=8 {
        for &beta in &[0.5, 1.0, 2.0] {
            for &t in &[0.1, 1.0, 5.0] {
                let p = ModelParams::resonant(0.2, beta, 0.0, n, 1.3).unwrap();
                let r = fundamental_finite_sum(&p, t, 0.5).unwrap();
                let q = (-2.0 * f64::from(n) * beta * t).exp();
                assert!((r.atom_weight - q).abs() <= 1e-10 * q);
                assert!((r.mass().unwrap() - 1.0).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn mean_and_variance_formulas() {
    for n in 1..5 {
        for &sigma in &[0.0, 0.5] {
            let p = ModelParams::resonant(0.7, 1.3, sigma, n, 1.1).unwrap();
            let (t, y) = (0.8, -0.4);
            let r = fundamental_finite_sum(&p, t, y).unwrap();
            let m = r.moments().unwrap();
            assert!((m.mass - 1.0).abs() < 1e-12);
            let mean = p.singular_location(t, y).unwrap();
            assert!((m.mean() - mean).abs() < 1e-10);
            assert!((m.variance() - p.transition_variance(t).unwrap()).abs() < 1e-10);
        }
    }
}

#[test]
fn series_stops_at_integer_alpha() {
    for n in 1..6 {
        for &sigma in &[0.0, 0.4] {
            let p = ModelParams::resonant(0.1, 1.0, sigma, n, 1.0).unwrap();
            let s = fundamental_series(&p, 0.9, 0.2, 1e-10, 64).unwrap();
            let f = fundamental_finite_sum(&p, 0.9, 0.2).unwrap();
            assert_eq!(s.meta.terms_used, n + 1);
            assert_eq!(s.meta.truncation_bound, 0.0);
            assert!((s.atom_weight - f.atom_weight).abs() < 1e-14);
            for i in -30..=30 {
                let x = 0.3 * f64::from(i);
                assert!((s.value(x).unwrap() - f.value(x).unwrap()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn series_for_zero_alpha() {
    let p = params(0.5, 1.0, 0.0, 0.0, 1.0);
    let s = fundamental_series(&p, 2.0, 1.0, 1e-10, 64).unwrap();
    assert!(s.regular.is_zero());
    assert_eq!(s.atom_weight, 1.0);
    let f = fundamental_finite_sum(&p, 2.0, 1.0).unwrap();
    assert!(f.regular.is_zero());
    assert_eq!(f.atom_weight, 1.0);
}

#[test]
fn series_truncation_bound_is_honest() {
    let p = params(0.0, 1.0, 0.0, 3.0, 1.0);
    let reference = fundamental_series(&p, 0.3, 0.0, 1e-14, 120).unwrap();
    assert!(reference.meta.truncation_bound < 1e-13);
    let coarse = fundamental_series(&p, 0.3, 0.0, 1e-4, 64).unwrap();
    assert!(coarse.meta.terms_used < reference.meta.terms_used);
    let mut worst: f64 = 0.0;
    for i in -80..=80 {
        let x = 0.125 * f64::from(i) + 0.01;
        worst = worst.max((coarse.value(x).unwrap() - reference.value(x).unwrap()).abs());
    }
    assert!(
        worst <= coarse.meta.truncation_bound + 1e-12,
        "{worst} > {}",
        coarse.meta.truncation_bound
    );
    assert!((coarse.atom_weight - reference.atom_weight).abs() <= coarse.meta.atom_tail + 1e-14);
    assert!((reference.atom_weight - p.singular_amplitude(0.3).unwrap()).abs() < 1e-12);
}

#[test]
fn series_mass_is_one() {
    for &lambda in &[0.6, 1.4, 3.0, 5.2] {
        let p = params(0.3, 1.0, 0.0, lambda, 1.2);
        let s = fundamental_series(&p, 0.3, 0.0, 1e-12, 64).unwrap();
        assert!(s.meta.truncation_bound < 1e-12);
        assert!(
            (s.mass().unwrap() - 1.0).abs() < 1e-10,
            "lambda={lambda}: {}",
            s.mass().unwrap()
        );
    }
}

#[test]
fn singular_point_is_rejected_for_small_alpha() {
    let p = params(0.0, 1.0, 0.0, 1.0, 1.0);
    let s = fundamental_series(&p, 2.0, 0.0, 1e-10, 64).unwrap();
    assert!(matches!(s.value(0.0), Err(Error::Singularity { .. })));
    assert!(s.value(0.1).is_ok());
    let p = params(0.0, 1.0, 0.0, 3.0, 1.0);
    let s = fundamental_series(&p, 2.0, 0.0, 1e-10, 64).unwrap();
    assert!(s.value(0.0).unwrap().is_finite());
}

#[test]
fn f1_examples() {
    let p = params(0.0, 1.0, 0.0, 2.0, 1.0);
    assert_eq!(f1(&p, 0.7).unwrap().value(0.0), 0.5);
    let ps = params(0.0, 1.0, 0.8, 2.0, 1.0);
    assert_eq!(f1(&ps, 0.0).unwrap(), f1(&p, 0.0).unwrap());
}

/// `[F_1]` for σ > 0 written out with Erf:
/// `e^{-k²A2}/(4k) [2 cosh kx + Erf(x/2s - ks) e^{-kx} + Erf(-x/2s - ks) e^{kx}]`.
fn f1_erf_formula(k: f64, a2: f64, x: f64) -> f64 {
    let s = (-a2).sqrt();
    let e = special::erf;
    (-k * k * a2).exp() / (4.0 * k)
        * (2.0 * (k * x).cosh() + e(x / (2.0 * s) - k * s) * (-k * x).exp() + e(-x / (2.0 * s) - k * s) * (k * x).exp())
}

#[test]
fn f1_sigma_matches_erf_formula() {
    for &(k, sigma, t) in &[(1.0, 0.5, 1.0), (2.0, 0.3, 0.4), (0.7, 1.1, 3.0)] {
        let p = params(0.0, 1.0, sigma, 2.0, k);
        let a2 = p.time_coeffs(t).unwrap().a2;
        let e = f1(&p, t).unwrap();
        for i in -20..=20 {
            let x = 0.2 * f64::from(i);
            let want = f1_erf_formula(k, a2, x);
            assert!((e.value(x) - want).abs() < 1e-11, "x={x}");
        }
    }
}

#[test]
fn f1_sigma_ode_identity() {
    for &(k, sigma, t) in &[(1.0, 0.5, 1.0), (2.0, 0.3, 0.4), (0.7, 1.1, 3.0)] {
        let p = params(0.0, 1.0, sigma, 2.0, k);
        let a2 = p.time_coeffs(t).unwrap().a2;
        let e = f1(&p, t).unwrap();
        let lhs = e.differentiate_n(2).unwrap().sub(&e.scale(k * k));
        for i in -30..=30 {
            let x = 0.1 * f64::from(i);
            let rhs = -(x * x / (4.0 * a2)).exp() / (2.0 * (-std::f64::consts::PI * a2).sqrt());
            let got = lhs.value(x);
            assert!((got - rhs).abs() <= 1e-10 * rhs.abs(), "x={x}: {got} vs {rhs}");
        }
    }
}

/// Numerators of `D_w^{n-1} (e^{A2 w^2}/(k^2+w^2)) = N(w) e^{A2 w^2}/(k^2+w^2)^n`.
fn lemma_numerator(n: u32, k: f64, a2: f64) -> Vec<f64> {
    use crate::term::poly;
    let mut num = vec![1.0];
    for m in 1..n {
        let d: Vec<f64> = num.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        let mut inner = d;
        poly::add_into(&mut inner, &poly::mul(&[0.0, 2.0 * a2], &num), 1.0);
        let mut next = poly::mul(&inner, &[k * k, 0.0, 1.0]);
        poly::add_into(&mut next, &poly::mul(&[0.0, -2.0 * f64::from(m)], &num), 1.0);
        num = next;
    }
    num
}

#[test]
fn fn_solves_its_ode() {
    for &sigma in &[0.0, 0.6] {
        for n in 2..=3u32 {
            let p = params(0.0, 1.0, sigma, 2.0, 1.3);
            let t = 0.8;
            let a2 = p.time_coeffs(t).unwrap().a2;
            let fnx = fn_expr(&p, t, n).unwrap();
            let rhs = f1(&p, t).unwrap().multiply_monomial(n - 1);
            let mut num = lemma_numerator(n, p.k(), a2);
            while num.last() == Some(&0.0) {
                num.pop();
            }
            let mut lhs = Expr::zero();
            let mut d = fnx;
            for (j, &a) in num.iter().enumerate() {
                if j > 0 {
                    d = d.differentiate().unwrap();
                }
                if a == 0.0 {
                    continue;
                }
                // (-i)^{j-(n-1)} is real because a_j vanishes off the parity of n-1
                let e = j as i64 - i64::from(n - 1);
                assert_eq!(e.rem_euclid(2), 0);
                let s = if (e / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                lhs = lhs.add(&d.scale(a * s));
            }
            for i in -25..=25 {
                let x = 0.2 * f64::from(i) + 0.013;
                let (l, r) = (lhs.value(x), rhs.value(x));
                assert!((l - r).abs() < 1e-10, "sigma={sigma} n={n} x={x}: {l} vs {r}");
            }
        }
    }
}

#[test]
fn stationary_examples() {
    let p = params(0.0, 1.0, 0.0, 2.0, 1.0);
    let s = stationary_density(&p).unwrap();
    assert_eq!(s.value(0.0).unwrap(), 0.5);
    assert_relative_eq!(s.expr().unwrap().integrate_line().unwrap(), 1.0, max_relative = 1e-15);
    let ps = params(0.4, 1.0, 0.7, 2.0, 1.0);
    let ss = stationary_density(&ps).unwrap();
    assert_relative_eq!(ss.expr().unwrap().integrate_line().unwrap(), 1.0, max_relative = 1e-12);
    let half = params(0.0, 1.0, 0.0, 1.0, 1.0);
    let b = stationary_density(&half).unwrap();
    assert_relative_eq!(b.value(1.0).unwrap(), special::bessel_k0(1.0) / std::f64::consts::PI);
    assert!(matches!(
        stationary_density(&params(0.0, 1.0, 0.0, 4.0, 1.0)),
        Err(Error::NoClosedForm(_))
    ));
    assert!(matches!(
        stationary_density(&params(1.0, 1.0, 0.0, 1.0, 1.0)),
        Err(Error::NoClosedForm(_))
    ));
}

#[test]
fn stationary_is_large_time_limit() {
    for &sigma in &[0.0, 0.5] {
        let p = params(0.6, 1.0, sigma, 2.0, 1.0);
        let st = stationary_density(&p).unwrap();
        let r = fundamental_finite_sum(&p, 20.0, 1.0).unwrap();
        for i in -40..=40 {
            let x = 0.25 * f64::from(i);
            assert!((r.value(x).unwrap() - st.value(x).unwrap()).abs() < 1e-7);
        }
    }
}

#[test]
fn kernel_json_roundtrip() {
    let p = params(0.0, 1.0, 0.5, 4.0, 1.0);
    let r = fundamental_finite_sum(&p, 1.0, 0.0).unwrap();
    let s = serde_json::to_string(&r).unwrap();
    let back: KernelResult = serde_json::from_str(&s).unwrap();
    assert_eq!(back, r);
    assert!(s.contains("\"method\":\"finite_sum\""));
}
