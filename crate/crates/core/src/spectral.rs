//! Exact characteristic function and its numerical inversion.
//!
//! Convention: `Ê(w) = ∫ P(x) e^{-iwx} dx`, so `Ê = e^{-iwy}` at `t = 0`.
//! In the shifted frame `x̄ = x - x_s` the transform is real and even,
//!
//! ```text
//! Ê(w) = e^{-i w x_s} R(w),   R(w) = base(w)^α e^{A₂ w²},
//! base(w) = (k² + e^{-2βt} w²) / (k² + w²) ∈ (0, 1],
//! ```
//!
//! and the density is `(1/π) ∫_0^∞ R(w) cos(w x̄) dw`. The singular part
//! `q e^{A₂ w²}` (`q = e^{-λt}`) is removed before inversion when
//! requested, which turns the non-decaying σ = 0 integrand into one that
//! decays like `1/w²`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::model::{check_time, ModelParams};
use crate::quad;

/// Default absolute tolerance of the pointwise inversion.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharFn {
    pub params: ModelParams,
    pub t: f64,
    pub y: f64,
}

impl CharFn {
    pub fn new(params: ModelParams, t: f64, y: f64) -> Result<Self> {
        check_time(t)?;
        if !y.is_finite() {
            return Err(Error::InvalidInput(format!("initial state must be finite, got {y}")));
        }
        Ok(Self { params, t, y })
    }

    fn qb(&self) -> f64 {
        (-2.0 * self.params.beta() * self.t).exp()
    }

    fn a2(&self) -> f64 {
        self.params.time_coeffs(self.t).map(|c| c.a2).unwrap_or(0.0)
    }

    /// Atom location `x_s`.
    pub fn center(&self) -> f64 {
        self.params.singular_location(self.t, self.y).unwrap_or(self.y)
    }

    /// Weight of the singular part, `e^{-λt}`.
    pub fn atom_weight(&self) -> f64 {
        (-self.params.lambda() * self.t).exp()
    }

    /// `base(w)`; always in `(0, 1]` for real `w`.
    pub fn base(&self, w: f64) -> f64 {
        let k2 = self.params.k() * self.params.k();
        let b = (k2 + self.qb() * w * w) / (k2 + w * w);
        debug_assert!(b > 0.0 && b <= 1.0 + 1e-15, "base out of (0,1]: {b}");
        b.min(1.0)
    }

    /// `ln Ê(w)`, with the real part formed by `ln_1p` so that it is exact
    /// to rounding near `w = 0`.
    pub fn log_char(&self, w: f64) -> Complex64 {
        let k2 = self.params.k() * self.params.k();
        let omq = -(-2.0 * self.params.beta() * self.t).exp_m1();
        let re = self.params.alpha() * (-omq * w * w / (k2 + w * w)).ln_1p() + self.a2() * w * w;
        Complex64::new(re, -w * self.center())
    }

    /// Real, even transform in the shifted frame.
    pub fn envelope(&self, w: f64) -> f64 {
        let alpha = self.params.alpha();
        let g = (self.a2() * w * w).exp();
        if alpha == 0.0 {
            g
        } else {
            self.base(w).powf(alpha) * g
        }
    }

    /// `envelope - q e^{A₂w²}`, written as `q_b^α e^{A₂w²} expm1(α ln(base/q_b))`
    /// so the difference keeps its relative accuracy at large `w`.
    pub fn regular_envelope(&self, w: f64) -> f64 {
        let alpha = self.params.alpha();
        if alpha == 0.0 {
            return 0.0;
        }
        let qb = self.qb();
        let g = (self.a2() * w * w).exp();
        if qb == 0.0 {
            return self.base(w).powf(alpha) * g;
        }
        let k2 = self.params.k() * self.params.k();
        let omq = -(-2.0 * self.params.beta() * self.t).exp_m1();
        let rel = omq * k2 / ((k2 + w * w) * qb);
        self.atom_weight() * g * (alpha * rel.ln_1p()).exp_m1()
    }

    /// Evaluates `Ê(w)`.
    pub fn char_value(&self, w: f64) -> Complex64 {
        Complex64::from_polar(self.envelope(w), -w * self.center())
    }

    /// Transform of the singular part, `q e^{A₂w²} e^{-iwx_s}`.
    pub fn singular_value(&self, w: f64) -> Complex64 {
        Complex64::from_polar(self.atom_weight() * (self.a2() * w * w).exp(), -w * self.center())
    }

    /// `Ê(w)` minus the transform of the singular part.
    pub fn subtract_singular(&self, w: f64) -> Complex64 {
        Complex64::from_polar(self.regular_envelope(w), -w * self.center())
    }

    fn is_singular_point(&self, xbar: f64) -> bool {
        let alpha = self.params.alpha();
        self.params.sigma() == 0.0 && alpha > 0.0 && alpha <= 0.5 && self.t > 0.0 && xbar == 0.0
    }

    /// Inverse transform at one point, with its error estimate.
    pub fn invert_point(&self, x: f64, subtract_singular: bool, quad_tol: f64) -> Result<quad::QuadResult> {
        if !(quad_tol > 0.0) {
            return Err(Error::InvalidInput(format!("quad_tol must be > 0, got {quad_tol}")));
        }
        let sigma_zero = self.params.sigma() == 0.0 || self.t == 0.0;
        if sigma_zero && !subtract_singular {
            return Err(Error::InvalidInput(
                "the σ = 0 transform does not decay; subtract the singular part first".into(),
            ));
        }
        let xbar = x - self.center();
        if self.is_singular_point(xbar) {
            return Err(Error::Singularity {
                x,
                alpha: self.params.alpha(),
            });
        }
        if subtract_singular && self.params.alpha() == 0.0 {
            return Ok(quad::QuadResult { value: 0.0, error: 0.0 });
        }
        let g = |w: f64| {
            if subtract_singular {
                self.regular_envelope(w)
            } else {
                self.envelope(w)
            }
        };
        let inv_pi = std::f64::consts::FRAC_1_PI;
        let tol = quad_tol * std::f64::consts::PI;
        let a2 = self.a2();
        let r = if a2 < 0.0 {
            // Gaussian decay: cut where ∫_W^∞ e^{A₂w²} is below tol / 10
            let s = (-a2).sqrt();
            let mut wmax = (-(0.1 * tol).ln() / -a2).sqrt().max(1.0 / s);
            while (a2 * wmax * wmax).exp() / (2.0 * -a2 * wmax) > 0.1 * tol {
                wmax *= 1.2;
            }
            let tail = (a2 * wmax * wmax).exp() / (2.0 * -a2 * wmax);
            let r = quad::gl_adaptive(&|w| g(w) * (w * xbar).cos(), 0.0, wmax, 0.5 * tol);
            quad::QuadResult {
                value: r.value,
                error: r.error + tail,
            }
        } else if xbar == 0.0 {
            quad::exp_sinh(&g, 1e-3 * tol, 12)
        } else {
            quad::fourier_cos(&g, xbar.abs(), tol, 9)
        };
        Ok(quad::QuadResult {
            value: r.value * inv_pi,
            error: r.error * inv_pi,
        })
    }

    /// Pointwise inversion at arbitrary abscissae, in parallel.
    pub fn invert_points(&self, xs: &[f64], subtract_singular: bool, quad_tol: f64) -> Result<Vec<quad::QuadResult>> {
        xs.par_iter()
            .map(|&x| self.invert_point(x, subtract_singular, quad_tol))
            .collect()
    }
}

/// Inverted density on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub x_grid: UniformGrid,
    pub values: Vec<f64>,
    pub err_estimate: f64,
    pub singular_subtracted: bool,
    /// Weight removed with the singular part (0 when nothing was removed).
    pub atom_weight: f64,
}

impl SpectralGrid {
    /// Trapezoid mass of the samples.
    pub fn trapezoid_mass(&self) -> f64 {
        let h = self.x_grid.spacing();
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        h * (self.values.iter().sum::<f64>() - 0.5 * (self.values[0] + self.values[n - 1]))
    }

    /// Running trapezoid integral of the samples from the left end.
    pub fn cumulative(&self) -> Vec<f64> {
        let h = self.x_grid.spacing();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                acc += 0.5 * h * (self.values[i - 1] + v);
            }
            out.push(acc);
        }
        out
    }

    pub fn points(&self) -> Vec<f64> {
        self.x_grid.points()
    }
}

/// Inverts `cf` on `x_grid`. Grid points are independent and evaluated in
/// parallel; the result does not depend on the schedule.
pub fn invert_grid(cf: &CharFn, x_grid: &UniformGrid, subtract_singular: bool, quad_tol: f64) -> Result<SpectralGrid> {
    let xs = x_grid.points();
    let res = cf.invert_points(&xs, subtract_singular, quad_tol)?;
    let err_estimate = res.iter().map(|r| r.error).fold(0.0, f64::max);
    Ok(SpectralGrid {
        x_grid: *x_grid,
        values: res.iter().map(|r| r.value).collect(),
        err_estimate,
        singular_subtracted: subtract_singular,
        atom_weight: if subtract_singular { cf.atom_weight() } else { 0.0 },
    })
}

/// Mean and variance from central differences of `ln Ê` at `w = 0` with
/// two Richardson steps.
pub fn moments_from_char(cf: &CharFn) -> (f64, f64) {
    let k = cf.params.k();
    let s = cf.params.time_coeffs(cf.t).map(|c| c.a2).unwrap_or(0.0);
    let mut h = 0.05 * k.min(1.0);
    if s < 0.0 {
        h = h.min(0.05 / (-s).sqrt());
    }
    let first = |h: f64| (cf.log_char(h) - cf.log_char(-h)).im / (2.0 * h);
    let second = |h: f64| (cf.log_char(h) + cf.log_char(-h)).re / (h * h);
    let rich = |f: &dyn Fn(f64) -> f64| {
        let (a, b, c) = (f(h), f(0.5 * h), f(0.25 * h));
        let ab = (4.0 * b - a) / 3.0;
        let bc = (4.0 * c - b) / 3.0;
        (16.0 * bc - ab) / 15.0
    };
    // Ê = E e^{-iwX}: ψ'(0) = -i·mean, ψ''(0) = -variance
    let mean = -rich(&first);
    let variance = -rich(&second);
    (mean, variance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel;
    use crate::special::{bessel_k0, normal_pdf};

    fn params(b: f64, beta: f64, sigma: f64, lambda: f64, k: f64) -> ModelParams {
        ModelParams::new(b, beta, sigma, lambda, k).unwrap()
    }

    #[test]
    fn char_value_basics() {
        let p = params(0.4, 1.3, 0.6, 2.2, 1.7);
        let cf = CharFn::new(p, 0.8, -0.3).unwrap();
        assert_eq!(cf.char_value(0.0), Complex64::new(1.0, 0.0));
        for &w in &[0.1, 0.7, 3.0, 40.0] {
            let a = cf.char_value(w);
            let b = cf.char_value(-w).conj();
            assert!((a - b).norm() < 1e-15);
            let l = cf.log_char(w).exp();
            assert!((a - l).norm() < 1e-14);
        }
        let cf0 = CharFn::new(p, 0.0, 0.9).unwrap();
        for &w in &[0.3, 2.0] {
            let want = Complex64::from_polar(1.0, -w * 0.9);
            assert!((cf0.char_value(w) - want).norm() < 1e-15);
        }
        let ou = CharFn::new(params(0.0, 1.3, 0.6, 0.0, 1.7), 0.8, 0.0).unwrap();
        let a2 = ou.params.time_coeffs(0.8).unwrap().a2;
        assert!((ou.char_value(1.5).re - (a2 * 2.25).exp()).abs() < 1e-15);
    }

    #[test]
    fn subtraction() {
        let p = params(0.2, 1.0, 0.0, 2.0, 1.0);
        let cf = CharFn::new(p, 0.5, 0.0).unwrap();
        assert!((cf.subtract_singular(0.0).re - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        // α = 1: subtracted transform ~ k²(1 - e^{-2βt}) / w²
        let omq = 1.0 - (-1.0f64).exp();
        for &w in &[1e2, 1e3, 1e4] {
            let r = cf.subtract_singular(w).norm() * w * w;
            assert!((r - omq).abs() < 2.0 / (w * w) + 1e-12, "w={w}: {r}");
        }
        let none = CharFn::new(params(0.2, 1.0, 0.3, 0.0, 1.0), 0.5, 0.0).unwrap();
        for &w in &[0.0, 1.0, 9.0] {
            assert_eq!(none.subtract_singular(w), Complex64::new(0.0, 0.0));
        }
        for &w in &[0.0, 0.5, 3.0, 50.0] {
            let d = cf.char_value(w) - cf.singular_value(w) - cf.subtract_singular(w);
            assert!(d.norm() < 1e-15);
        }
    }

    #[test]
    fn inversion_matches_laplace_closed_form() {
        let p = params(0.0, 1.0, 0.0, 2.0, 1.0);
        let cf = CharFn::new(p, 0.5, 0.0).unwrap();
        let r = cf.invert_point(0.0, true, 1e-12).unwrap();
        assert!((r.value - 0.5 * (1.0 - (-1.0f64).exp())).abs() < 1e-10, "{r:?}");
        let g = UniformGrid::new(-6.0, 6.0, 121).unwrap();
        let s = invert_grid(&cf, &g, true, 1e-11).unwrap();
        for (x, v) in g.points().iter().zip(&s.values) {
            let want = 0.5 * (1.0 - (-1.0f64).exp()) * (-x.abs()).exp();
            assert!((v - want).abs() < 1e-9, "x={x}: {v} vs {want}");
        }
        assert!((s.trapezoid_mass() + s.atom_weight - 1.0).abs() < 2e-2);
    }

    #[test]
    fn inversion_reproduces_ou_gaussian() {
        let p = params(0.7, 1.5, 1.0, 0.0, 1.0);
        let (t, y) = (0.6, -1.0);
        let cf = CharFn::new(p, t, y).unwrap();
        let mean = p.singular_location(t, y).unwrap();
        let var = p.transition_variance(t).unwrap();
        for &x in &[-3.0, -1.0, 0.0, 0.4, 2.0] {
            let v = cf.invert_point(x, false, 1e-12).unwrap().value;
            assert!((v - normal_pdf(x - mean, var)).abs() < 1e-10, "x={x}");
            assert_eq!(cf.invert_point(x, true, 1e-12).unwrap().value, 0.0);
        }
    }

    #[test]
    fn inversion_matches_finite_sum() {
        for &(n, sigma, t) in &[
            (1, 0.0, 0.3),
            (2, 0.0, 1.0),
            (3, 0.0, 5.0),
            (2, 0.5, 1.0),
            (1, 0.5, 0.3),
        ] {
            let p = ModelParams::resonant(0.3, 1.0, sigma, n, 1.0).unwrap();
            let r = kernel::fundamental_finite_sum(&p, t, 0.2).unwrap();
            let cf = CharFn::new(p, t, 0.2).unwrap();
            for i in -20..=20 {
                let x = 0.5 * f64::from(i) + 0.013;
                let v = cf.invert_point(x, true, 1e-11).unwrap().value;
                let want = r.value(x).unwrap();
                assert!((v - want).abs() < 1e-8, "n={n} σ={sigma} t={t} x={x}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn errors() {
        let p = params(0.0, 1.0, 0.0, 1.0, 1.0);
        let cf = CharFn::new(p, 1.0, 0.0).unwrap();
        assert!(matches!(
            cf.invert_point(0.0, true, 1e-8),
            Err(Error::Singularity { .. })
        ));
        assert!(matches!(cf.invert_point(0.3, false, 1e-8), Err(Error::InvalidInput(_))));
        assert!(cf.invert_point(0.3, true, 1e-8).is_ok());
        let p = params(0.0, 1.0, 0.0, 3.0, 1.0);
        let cf = CharFn::new(p, 1.0, 0.0).unwrap();
        assert!(cf.invert_point(0.0, true, 1e-8).unwrap().value.is_finite());
        assert!(CharFn::new(p, -1.0, 0.0).is_err());
    }

    #[test]
    fn half_alpha_bessel_limit() {
        let p = params(0.0, 1.0, 0.0, 1.0, 1.0);
        let cf = CharFn::new(p, 20.0, 0.0).unwrap();
        for &x in &[0.5, 1.0, 2.0] {
            let v = cf.invert_point(x, true, 1e-10).unwrap().value;
            let want = bessel_k0(x) / std::f64::consts::PI;
            assert!((v - want).abs() < 1e-6, "x={x}: {v} vs {want}");
        }
    }

    #[test]
    fn moments_oracle() {
        for &(b, beta, sigma, lambda, k, t, y) in &[
            (0.3, 1.0, 0.0, 2.0, 1.0, 0.7, 0.2),
            (-0.5, 0.4, 0.8, 3.1, 2.2, 2.5, -1.0),
            (1.0, 2.0, 0.3, 0.0, 1.0, 0.1, 4.0),
        ] {
            let p = params(b, beta, sigma, lambda, k);
            let cf = CharFn::new(p, t, y).unwrap();
            let (m, v) = moments_from_char(&cf);
            let want_m = p.singular_location(t, y).unwrap();
            let want_v = p.transition_variance(t).unwrap();
            assert!((m - want_m).abs() < 1e-10 * want_m.abs().max(1.0), "{m} vs {want_m}");
            assert!((v - want_v).abs() < 1e-10 * want_v.max(1.0), "{v} vs {want_v}");
        }
        let cf = CharFn::new(params(0.3, 1.0, 0.4, 2.0, 1.0), 0.0, 0.5).unwrap();
        let (m, v) = moments_from_char(&cf);
        assert!((m - 0.5).abs() < 1e-12 && v.abs() < 1e-12);
    }

    #[test]
    fn parallel_schedule_does_not_matter() {
        let p = params(0.1, 1.0, 0.3, 2.7, 1.2);
        let cf = CharFn::new(p, 0.9, 0.0).unwrap();
        let g = UniformGrid::new(-5.0, 5.0, 64).unwrap();
        let a = invert_grid(&cf, &g, true, 1e-10).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| invert_grid(&cf, &g, true, 1e-10)).unwrap();
        assert_eq!(a, b);
    }
}
