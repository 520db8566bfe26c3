//! Exact rational templates for the unit-scale kernels.
//!
//! `G_n` is the inverse transform of `(1 + w^2)^{-n}`. It has the form
//! `P_n(|x|) e^{-|x|}` and satisfies `(1 - D^2) G_{n+1} = G_n`,
//! `G_0 = δ`. Derivatives are tracked as an even part
//! `Σ a_m |x|^m e^{-|x|}`, an odd part `sign(x) Σ b_m |x|^m e^{-|x|}` and a
//! delta weight, all with rational coefficients, so structural zeros stay
//! exactly zero.

use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::term::{BasisTerm, Expr};

/// A distribution `even(|x|) e^{-|x|} + sign(x) odd(|x|) e^{-|x|} + w δ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub even: Vec<BigRational>,
    pub odd: Vec<BigRational>,
    pub delta: BigRational,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn trim(v: &mut Vec<BigRational>) {
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
}

/// Coefficients `r_j = (j+1) c_{j+1} - c_j` of the derivative of
/// `Σ c_m x^m e^{-x}` on `x > 0`.
fn half_line_derivative(c: &[BigRational]) -> Vec<BigRational> {
    let mut out: Vec<BigRational> = (0..c.len())
        .map(|j| {
            let next = c.get(j + 1).cloned().unwrap_or_else(BigRational::zero);
            next * rat(j as i64 + 1) - &c[j]
        })
        .collect();
    trim(&mut out);
    out
}

impl Template {
    pub fn delta() -> Self {
        Template {
            even: Vec::new(),
            odd: Vec::new(),
            delta: BigRational::one(),
        }
    }

    pub fn from_even(even: Vec<BigRational>) -> Self {
        Template {
            even,
            odd: Vec::new(),
            delta: BigRational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.even.is_empty() && self.odd.is_empty() && self.delta.is_zero()
    }

    /// Distributional derivative. The even part is continuous and
    /// differentiates into an odd part; the odd part jumps by `2 b_0` at the
    /// origin and differentiates into an even part plus `2 b_0 δ`.
    pub fn differentiate(&self) -> Result<Template> {
        if !self.delta.is_zero() {
            return Err(Error::DeltaDerivative);
        }
        let delta = self.odd.first().map(|b0| b0 * rat(2)).unwrap_or_else(BigRational::zero);
        Ok(Template {
            even: half_line_derivative(&self.odd),
            odd: half_line_derivative(&self.even),
            delta,
        })
    }

    pub fn scale(&self, s: &BigRational) -> Template {
        let mut even: Vec<_> = self.even.iter().map(|c| c * s).collect();
        let mut odd: Vec<_> = self.odd.iter().map(|c| c * s).collect();
        trim(&mut even);
        trim(&mut odd);
        Template {
            even,
            odd,
            delta: &self.delta * s,
        }
    }

    pub fn add(&self, other: &Template) -> Template {
        let add_vec = |a: &[BigRational], b: &[BigRational]| {
            let n = a.len().max(b.len());
            let mut v: Vec<BigRational> = (0..n)
                .map(|i| {
                    a.get(i).cloned().unwrap_or_else(BigRational::zero)
                        + b.get(i).cloned().unwrap_or_else(BigRational::zero)
                })
                .collect();
            trim(&mut v);
            v
        };
        Template {
            even: add_vec(&self.even, &other.even),
            odd: add_vec(&self.odd, &other.odd),
            delta: &self.delta + &other.delta,
        }
    }

    pub fn delta_f64(&self) -> f64 {
        self.delta.to_f64().unwrap_or(f64::NAN)
    }

    /// `scale * T(k (x - center))` as an expression. The delta, if any, is
    /// dropped here; callers read it from [`Template::delta_f64`] and
    /// account for `δ(k u) = δ(u)/k`.
    pub fn regular_expr(&self, k: f64, scale: f64, center: f64) -> Expr {
        let mut terms = Vec::with_capacity(self.even.len() + self.odd.len());
        let mut kp = 1.0;
        let n = self.even.len().max(self.odd.len());
        for m in 0..n {
            // |x|^m = x^m sign^m
            if let Some(a) = self.even.get(m) {
                let c = a.to_f64().unwrap_or(f64::NAN);
                if c != 0.0 {
                    terms.push(BasisTerm::ExpAbs {
                        coeff: scale * c * kp,
                        power: m as u32,
                        sign: m % 2 == 1,
                        decay: k,
                        center,
                    });
                }
            }
            if let Some(b) = self.odd.get(m) {
                let c = b.to_f64().unwrap_or(f64::NAN);
                if c != 0.0 {
                    terms.push(BasisTerm::ExpAbs {
                        coeff: scale * c * kp,
                        power: m as u32,
                        sign: m % 2 == 0,
                        decay: k,
                        center,
                    });
                }
            }
            kp *= k;
        }
        Expr::from_terms(terms)
    }

    /// `Σ |c_m| sup_{x>0} x^m e^{-x}` over both parts: a rigorous bound on
    /// the sup-norm of the regular part at unit scale.
    pub fn sup_bound(&self) -> f64 {
        let sup_m = |m: usize| {
            if m == 0 {
                1.0
            } else {
                let mf = m as f64;
                (mf * (mf.ln() - 1.0)).exp()
            }
        };
        self.even
            .iter()
            .chain(self.odd.iter())
            .enumerate()
            .map(|(i, c)| {
                let m = if i < self.even.len() { i } else { i - self.even.len() };
                c.to_f64().unwrap_or(f64::INFINITY).abs() * sup_m(m)
            })
            .sum()
    }
}

fn cache() -> &'static Mutex<Vec<Vec<BigRational>>> {
    static CACHE: OnceLock<Mutex<Vec<Vec<BigRational>>>> = OnceLock::new();
    CACHE.get_or_init(|| {
        Mutex::new(vec![
            Vec::new(),
            vec![BigRational::new(BigInt::from(1), BigInt::from(2))],
        ])
    })
}

/// Coefficients of `P_n` with `G_n = P_n(|x|) e^{-|x|}`, `n >= 1`.
///
/// On `x > 0`, `(1 - D^2)(P e^{-x}) = (2P' - P'') e^{-x}`, so `R = P'` solves
/// `2R - R' = Q` with `R = Σ_i Q^{(i)}/2^{i+1}`; the constant is fixed by
/// `G'(0+) = 0`, i.e. `P(0) = R(0)`.
pub fn template_poly(n: usize) -> Vec<BigRational> {
    assert!(n >= 1, "templates start at n = 1");
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    while guard.len() <= n {
        let q = guard.last().cloned().unwrap_or_default();
        let mut r = vec![BigRational::zero(); q.len()];
        let mut deriv = q.clone();
        let mut scale = BigRational::new(BigInt::from(1), BigInt::from(2));
        while !deriv.is_empty() {
            for (i, c) in deriv.iter().enumerate() {
                r[i] += c * &scale;
            }
            deriv = deriv
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * rat(i as i64))
                .collect();
            scale /= rat(2);
        }
        let mut p = vec![r.first().cloned().unwrap_or_else(BigRational::zero)];
        for (i, c) in r.iter().enumerate() {
            p.push(c / rat(i as i64 + 1));
        }
        trim(&mut p);
        guard.push(p);
    }
    guard[n].clone()
}

pub fn template(n: usize) -> Template {
    if n == 0 {
        Template::delta()
    } else {
        Template::from_even(template_poly(n))
    }
}

pub(crate) fn binom_int(n: usize, k: usize) -> BigRational {
    let mut c = BigInt::from(1);
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(c)
}

/// `D^{2j} G_n = Σ_i C(j, i) (-1)^i G_{n-i}` for `j <= n`, from
/// `D^2 G_m = G_m - G_{m-1}`.
pub fn even_derivative(n: usize, j: usize) -> Template {
    assert!(j <= n, "D^{{2j}} G_n needs j <= n");
    let mut acc = Template::from_even(Vec::new());
    for i in 0..=j {
        let mut c = binom_int(j, i);
        if i % 2 == 1 {
            c = -c;
        }
        acc = acc.add(&template(n - i).scale(&c));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn first_templates() {
        assert_eq!(template_poly(1), vec![r(1, 2)]);
        assert_eq!(template_poly(2), vec![r(1, 4), r(1, 4)]);
        assert_eq!(template_poly(3), vec![r(3, 16), r(3, 16), r(1, 16)]);
    }

    #[test]
    fn recurrence_holds_exactly() {
        for n in 1..10 {
            let g = template(n + 1);
            let d2 = g.differentiate().unwrap().differentiate().unwrap();
            let lhs = g.add(&d2.scale(&rat(-1)));
            assert_eq!(lhs, template(n), "n = {n}");
        }
        // (1 - D^2) G_1 = δ
        let g1 = template(1);
        let d2 = g1.differentiate().unwrap().differentiate().unwrap();
        assert_eq!(g1.add(&d2.scale(&rat(-1))), Template::delta());
    }

    #[test]
    fn smoothness_of_templates() {
        // G_n is C^{2n-2}: derivatives below 2n-1 have no jump (odd parts
        // vanish at 0 when continuous), D^{2n-1} G_n has a jump, D^{2n} a delta
        for n in 1..7 {
            let mut t = template(n);
            for order in 1..=(2 * n) {
                t = t.differentiate().unwrap();
                let has_delta = !t.delta.is_zero();
                assert_eq!(has_delta, order == 2 * n, "n={n} order={order}");
                if has_delta {
                    let sign = if n % 2 == 0 { 1 } else { -1 };
                    assert_eq!(t.delta, rat(sign));
                }
            }
        }
    }

    #[test]
    fn even_derivative_matches_repeated_differentiation() {
        for n in 1..7 {
            for j in 0..=n {
                let mut t = template(n);
                for _ in 0..2 * j {
                    t = t.differentiate().unwrap();
                }
                assert_eq!(even_derivative(n, j), t, "n={n} j={j}");
            }
        }
    }

    #[test]
    fn unit_mass_and_value() {
        // ∫ G_n = 1 (transform at w = 0), G_n(0) = C(2n-2, n-1)/4^{n-1}/2
        for n in 1..9 {
            let e = template(n).regular_expr(1.0, 1.0, 0.0);
            let mass = e.integrate_line().unwrap();
            assert!((mass - 1.0).abs() < 1e-14, "n={n}: {mass}");
            let g0 = binom_int(2 * n - 2, n - 1).to_f64().unwrap() / 4f64.powi(n as i32 - 1) / 2.0;
            assert!((e.value(0.0) - g0).abs() < 1e-15);
        }
    }

    #[test]
    fn sup_bound_dominates() {
        for n in 1..6 {
            let t = even_derivative(n, n);
            let e = t.regular_expr(1.0, 1.0, 0.0);
            let b = t.sup_bound();
            for i in -200..200 {
                let x = i as f64 * 0.05;
                assert!(e.value(x).abs() <= b + 1e-12);
            }
        }
    }
}
