//! Closed-form fundamental solution.
//!
//! In the frame `x̄ = x - x_s(t, y)` the transform of the kernel is
//! `((k^2 + q w^2)/(k^2 + w^2))^α e^{A2 w^2}` with `q = e^{-2βt}`. For integer
//! `α = n` the binomial theorem gives the finite sum
//! `Σ_j (-1)^j C(n,j) k^{2(n-j)} q^j D^{2j}[F_n]`; collecting the templates
//! `D^2 G_m = G_m - G_{m-1}` turns it into the nonnegative mixture
//! `k Σ_m C(n,m) (1-q)^m q^{n-m} G_m(k x̄)`, which is what is evaluated.
//! General `α` uses the binomial series `Σ_j C(α,j) (1-q)^j D^{2j}[F_j]`.
//!
//! With `σ > 0` everything is convolved with the centred normal of variance
//! `-2 A2`; the no-jump mass then sits in a Gaussian packet of that variance
//! instead of a delta.

pub mod exact;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, Resonance};
use crate::special;
use crate::term::{Atom, BasisTerm, Evaluation, Expr, Moments};

pub const DEFAULT_SERIES_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_TERMS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    FiniteSum,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelMeta {
    pub alpha: f64,
    pub resonance: Resonance,
    pub method: KernelMethod,
    /// Number of summands used, the `j = 0` atom included.
    pub terms_used: u32,
    /// Bound on the sup-norm of the omitted regular terms (0 when exact).
    pub truncation_bound: f64,
    /// Bound on the omitted part of the atom weight.
    pub atom_tail: f64,
}

/// Regular part plus singular component of the fundamental solution at a
/// fixed `(t, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelResult {
    pub regular: Expr,
    pub atom_weight: f64,
    pub atom_center: f64,
    /// Variance of the packet carrying the no-jump mass; 0 means a delta.
    pub atom_variance: f64,
    pub t: f64,
    pub y: f64,
    pub sigma: f64,
    pub meta: KernelMeta,
}

impl KernelResult {
    /// The singular component as an expression: a delta, or its Gaussian
    /// smoothing when `σ > 0`.
    pub fn singular(&self) -> Expr {
        if self.atom_weight == 0.0 {
            Expr::zero()
        } else if self.atom_variance > 0.0 {
            Expr::delta(self.atom_weight, self.atom_center)
                .convolve_gaussian(self.atom_variance)
                .expect("positive variance")
        } else {
            Expr::delta(self.atom_weight, self.atom_center)
        }
    }

    /// Regular and singular components together.
    pub fn full(&self) -> Expr {
        self.regular.add(&self.singular())
    }

    fn singular_point(&self, x: f64) -> bool {
        self.sigma == 0.0 && self.meta.alpha > 0.0 && self.meta.alpha <= 0.5 && self.t > 0.0 && x == self.atom_center
    }

    /// Regular value at `x` with the atom report.
    pub fn evaluate(&self, x: f64) -> Result<Evaluation> {
        if self.singular_point(x) {
            return Err(Error::Singularity {
                x,
                alpha: self.meta.alpha,
            });
        }
        let atoms = if self.atom_weight != 0.0 && self.atom_variance == 0.0 {
            vec![Atom {
                weight: self.atom_weight,
                center: self.atom_center,
            }]
        } else {
            Vec::new()
        };
        Ok(Evaluation {
            value: self.regular.value(x),
            atoms,
        })
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate(x)?.value)
    }

    /// Density of the absolutely continuous law when `σ > 0` (regular part
    /// plus the Gaussian packet); equals [`KernelResult::value`] when `σ = 0`.
    pub fn density(&self, x: f64) -> Result<f64> {
        let base = self.value(x)?;
        if self.atom_variance > 0.0 {
            Ok(base + self.atom_weight * special::normal_pdf(x - self.atom_center, self.atom_variance))
        } else {
            Ok(base)
        }
    }

    pub fn values(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.value(x)).collect()
    }

    /// Distribution function of the full law.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.full().cdf(x)
    }

    pub fn regular_cdf(&self, x: f64) -> Result<f64> {
        self.regular.cdf(x)
    }

    pub fn moments(&self) -> Result<Moments> {
        self.full().moments()
    }

    pub fn mass(&self) -> Result<f64> {
        Ok(self.regular.integrate_line()? + self.atom_weight)
    }
}

/// `[F_1]` in the shifted frame: `e^{-k|x|}/(2k)`, smoothed by the normal of
/// variance `-2 A2(t)` when `σ > 0`.
pub fn f1(params: &ModelParams, t: f64) -> Result<Expr> {
    fn_expr(params, t, 1)
}

/// `[F_n]`, the inverse transform of `e^{A2 w^2}/(k^2 + w^2)^n`, in the
/// shifted frame.
pub fn fn_expr(params: &ModelParams, t: f64, n: u32) -> Result<Expr> {
    if n == 0 {
        return Err(Error::InvalidInput("F_n is defined for n >= 1".into()));
    }
    let k = params.k();
    let base = exact::template(n as usize).regular_expr(k, k.powi(1 - 2 * n as i32), 0.0);
    smooth(base, params, t)
}

fn smooth(e: Expr, params: &ModelParams, t: f64) -> Result<Expr> {
    let v = params.time_coeffs(t)?.gaussian_variance();
    if v > 0.0 {
        e.convolve_gaussian(v)
    } else {
        Ok(e)
    }
}

/// The exact kernel for integer `α = n` (including `α = 0`).
pub fn fundamental_finite_sum(params: &ModelParams, t: f64, y: f64) -> Result<KernelResult> {
    let n = match params.resonance() {
        Resonance::Zero => 0,
        Resonance::Integer { n } => n,
        Resonance::General { alpha } => return Err(Error::NonIntegerAlpha(alpha)),
    };
    let q = (-2.0 * params.beta() * t).exp();
    let one_minus_q = -(-2.0 * params.beta() * t).exp_m1();
    let center = params.singular_location(t, y)?;
    let k = params.k();
    let mut regular = Expr::zero();
    let mut binom = 1.0;
    for m in 1..=n {
        binom = binom * f64::from(n - m + 1) / f64::from(m);
        let w = binom * one_minus_q.powi(m as i32) * q.powi((n - m) as i32);
        if w == 0.0 {
            continue;
        }
        let g = exact::template(m as usize);
        regular = regular.add(&g.regular_expr(k, k * w, center));
    }
    let regular = smooth(regular, params, t)?;
    Ok(KernelResult {
        regular,
        atom_weight: params.singular_amplitude(t)?,
        atom_center: center,
        atom_variance: params.time_coeffs(t)?.gaussian_variance(),
        t,
        y,
        sigma: params.sigma(),
        meta: KernelMeta {
            alpha: params.alpha(),
            resonance: params.resonance(),
            method: KernelMethod::FiniteSum,
            terms_used: n + 1,
            truncation_bound: 0.0,
            atom_tail: 0.0,
        },
    })
}

/// `(1/2) Σ_{l<j} C(2l,l)/4^l`, the sup-norm bound of the regular part of
/// `D^{2j} G_j` obtained from `1 - r^j = (1-r) Σ_{l<j} r^l`,
/// `r = w^2/(1+w^2)`.
fn template_sup(j: u32) -> f64 {
    let mut c = 1.0;
    let mut s = 0.0;
    for l in 0..j {
        s += c;
        c *= (2.0 * f64::from(l) + 1.0) / (2.0 * f64::from(l) + 2.0);
    }
    0.5 * s
}

/// Bounds on `Σ_{j>J} |C(α,j)| (1-q)^j sup|reg D^{2j} G_j|` and
/// `Σ_{j>J} |C(α,j)| (1-q)^j`. Infinite when the bound does not converge.
fn series_tail(alpha: f64, one_minus_q: f64, last: u32) -> (f64, f64) {
    if one_minus_q == 0.0 {
        return (0.0, 0.0);
    }
    let mut c = special::binom_real(alpha, last + 1).abs();
    if c == 0.0 {
        return (0.0, 0.0);
    }
    let mut p = one_minus_q.powi(last as i32 + 1);
    let mut s = template_sup(last + 1);
    let mut mid = 0.5 * (1..=last + 1).fold(1.0, |acc, l| acc * (2.0 * f64::from(l) - 1.0) / (2.0 * f64::from(l)));
    let (mut reg, mut atom) = (0.0, 0.0);
    let mut j = last + 1;
    while j < 1_000_000 {
        let term = c * p;
        reg += term * s;
        atom += term;
        // ratio of consecutive terms, bounded by one_minus_q (1 + 1/sqrt(pi j))
        let jf = f64::from(j);
        if jf > alpha + 1.0 {
            let r = one_minus_q * (1.0 + 1.0 / (std::f64::consts::PI * jf).sqrt());
            if r < 1.0 {
                let geo = r / (1.0 - r);
                if term * s * geo <= 1e-3 * reg.max(1e-300) || term * s * geo < 1e-300 {
                    return (reg + term * s * geo, atom + term * geo);
                }
            }
        }
        c *= ((jf - alpha) / (jf + 1.0)).abs();
        p *= one_minus_q;
        s += mid;
        mid *= (2.0 * jf + 1.0) / (2.0 * jf + 2.0);
        j += 1;
        if c == 0.0 || p == 0.0 {
            return (reg, atom);
        }
    }
    (f64::INFINITY, f64::INFINITY)
}

/// Binomial series in `j`, truncated once the bound on the omitted terms is
/// below `tol` or after `max_terms` summands.
pub fn fundamental_series(params: &ModelParams, t: f64, y: f64, tol: f64, max_terms: u32) -> Result<KernelResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("series tolerance must be > 0, got {tol}")));
    }
    if max_terms == 0 {
        return Err(Error::InvalidInput("max_terms must be >= 1".into()));
    }
    let alpha = params.alpha();
    let one_minus_q = -(-2.0 * params.beta() * t).exp_m1();
    let center = params.singular_location(t, y)?;
    let k = params.k();
    let mut regular = Expr::zero();
    let mut atom = 1.0;
    let mut binom = 1.0;
    let mut used = 1u32;
    let mut tail = series_tail(alpha, one_minus_q, 0);
    let mut j = 1u32;
    while used < max_terms && tail.0 >= tol {
        binom *= (alpha - f64::from(j - 1)) / f64::from(j);
        if binom == 0.0 {
            tail = (0.0, 0.0);
            break;
        }
        let w = binom * one_minus_q.powi(j as i32);
        let d = exact::even_derivative(j as usize, j as usize);
        regular = regular.add(&d.regular_expr(k, k * w, center));
        // δ(k x̄) = δ(x̄)/k cancels the prefactor k
        atom += w * d.delta_f64();
        used += 1;
        tail = series_tail(alpha, one_minus_q, j);
        j += 1;
    }
    if alpha == 0.0 {
        tail = (0.0, 0.0);
    }
    let regular = smooth(regular, params, t)?;
    Ok(KernelResult {
        regular,
        atom_weight: atom,
        atom_center: center,
        atom_variance: params.time_coeffs(t)?.gaussian_variance(),
        t,
        y,
        sigma: params.sigma(),
        meta: KernelMeta {
            alpha,
            resonance: params.resonance(),
            method: KernelMethod::Series,
            terms_used: used,
            truncation_bound: tail.0,
            atom_tail: tail.1,
        },
    })
}

/// Finite sum when `α` is an integer, series otherwise.
pub fn fundamental(params: &ModelParams, t: f64, y: f64) -> Result<KernelResult> {
    match params.resonance() {
        Resonance::General { .. } => fundamental_series(params, t, y, DEFAULT_SERIES_TOL, DEFAULT_MAX_TERMS),
        _ => fundamental_finite_sum(params, t, y),
    }
}

/// Large-time limit of the regular part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stationary {
    Closed {
        expr: Expr,
    },
    /// `(k/π) K0(k |x - center|)`, evaluated pointwise.
    Bessel {
        k: f64,
        center: f64,
    },
}

impl Stationary {
    pub fn value(&self, x: f64) -> Result<f64> {
        match self {
            Stationary::Closed { expr } => Ok(expr.value(x)),
            Stationary::Bessel { k, center } => {
                let u = (x - center).abs();
                if u == 0.0 {
                    return Err(Error::Singularity { x, alpha: 0.5 });
                }
                Ok(k / std::f64::consts::PI * special::bessel_k0(k * u))
            }
        }
    }

    pub fn expr(&self) -> Option<&Expr> {
        match self {
            Stationary::Closed { expr } => Some(expr),
            Stationary::Bessel { .. } => None,
        }
    }
}

/// Stationary density where a closed form is known: `α = 1` (any `σ`) and
/// `α = 1/2` with `B = 0`, `σ = 0`.
pub fn stationary_density(params: &ModelParams) -> Result<Stationary> {
    let k = params.k();
    let beta = params.beta();
    let sigma = params.sigma();
    let center = params.b() / beta;
    match params.resonance() {
        Resonance::Integer { n: 1 } => {
            if sigma == 0.0 {
                return Ok(Stationary::Closed {
                    expr: Expr::exp_abs(0.5 * k, k, center),
                });
            }
            // (k/4) e^{σ²k²/(4β)} [erfc(-√β u/σ + c) e^{-ku} + erfc(√β u/σ + c) e^{ku}],
            // c = σk/(2√β), u = x - B/β
            let pre = 0.25 * k * (sigma * sigma * k * k / (4.0 * beta)).exp();
            let slope = beta.sqrt() / sigma;
            let c = sigma * k / (2.0 * beta.sqrt());
            let expr = Expr::from_terms(vec![
                BasisTerm::ErfcExp {
                    coeff: pre,
                    power: 0,
                    rate: -k,
                    slope: -slope,
                    offset: c,
                    center,
                },
                BasisTerm::ErfcExp {
                    coeff: pre,
                    power: 0,
                    rate: k,
                    slope,
                    offset: c,
                    center,
                },
            ]);
            Ok(Stationary::Closed { expr })
        }
        Resonance::General { alpha } if alpha == 0.5 && params.b() == 0.0 && sigma == 0.0 => {
            Ok(Stationary::Bessel { k, center: 0.0 })
        }
        r => Err(Error::NoClosedForm(format!(
            "no closed stationary density for {r:?}, sigma = {sigma}, B = {}; use spectral inversion at large t",
            params.b()
        ))),
    }
}

#[cfg(test)]
mod tests;
