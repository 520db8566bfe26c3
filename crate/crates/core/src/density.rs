//! Evolution of initial densities by convolution with the fundamental
//! solution.
//!
//! With `u = y e^{-βt}` the kernel depends on `x` and `y` only through
//! `x̄ = x + A₁ - u`, so
//!
//! ```text
//! P(t, x) = ∫ K_r(x + A₁ - y e^{-βt}) φ(y) dy + q e^{βt} φ((x + A₁) e^{βt})
//! ```
//!
//! for σ = 0, the last term being the pushforward of `φ` along the
//! jump-free flow. For σ > 0 the singular part is a Gaussian packet and is
//! folded into the smooth kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::kernel;
use crate::model::{check_time, ModelParams, Resonance};
use crate::quad;
use crate::spectral::SpectralGrid;
use crate::term::{BasisTerm, Expr};

/// Relative mass defect above which sampled data is reported on ingest.
pub const MASS_WARN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// Normal density with mean `a`.
    Gaussian { a: f64, variance: f64 },
    /// Indicator of `[-a - 1/2, -a + 1/2]`.
    Step { a: f64 },
    /// Samples on a uniform grid, normalized to unit mass.
    Sampled { grid: UniformGrid, values: Vec<f64> },
}

impl InitialData {
    /// `e^{-(x-a)^2} / √π`.
    pub fn unit_gaussian(a: f64) -> Self {
        InitialData::Gaussian { a, variance: 0.5 }
    }

    /// Validates samples on a uniform grid and rescales them to unit
    /// Simpson mass, warning when the input mass was off by more than
    /// [`MASS_WARN_TOL`].
    pub fn sampled(x: &[f64], values: &[f64]) -> Result<Self> {
        if x.len() != values.len() {
            return Err(Error::InvalidInput(
                "sampled data: x and value columns differ in length".into(),
            ));
        }
        if x.len() < 3 {
            return Err(Error::InvalidInput("sampled data needs at least three points".into()));
        }
        if values.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sampled data contains non-finite values".into()));
        }
        let grid = UniformGrid::new(x[0], x[x.len() - 1], x.len())?;
        let h = grid.spacing();
        for (i, &xi) in x.iter().enumerate() {
            if (xi - grid.point(i)).abs() > 1e-6 * h {
                return Err(Error::InvalidInput(format!(
                    "sampled data must be on a uniform grid; x[{i}] = {xi} is off by {:e}",
                    xi - grid.point(i)
                )));
            }
        }
        let w = quad::simpson_weights(values.len(), h);
        let mass: f64 = w.iter().zip(values).map(|(a, b)| a * b).sum();
        if !(mass > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sampled data has non-positive mass {mass}"
            )));
        }
        if (mass - 1.0).abs() > MASS_WARN_TOL {
            log::warn!("sampled initial data has mass {mass}; renormalizing");
        }
        Ok(InitialData::Sampled {
            grid,
            values: values.iter().map(|v| v / mass).collect(),
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            InitialData::Gaussian { a, variance } => crate::special::normal_pdf(x - a, *variance),
            InitialData::Step { .. } => self.as_expr().map_or(0.0, |e| e.value(x)),
            InitialData::Sampled { grid, values } => interp(grid, values, x),
        }
    }

    /// The data as a term expression, when it has one.
    pub fn as_expr(&self) -> Option<Expr> {
        match *self {
            InitialData::Gaussian { a, variance } => Some(Expr::term(BasisTerm::Gauss {
                coeff: 1.0 / (2.0 * std::f64::consts::PI * variance).sqrt(),
                power: 0,
                quad: -0.5 / variance,
                lin: 0.0,
                center: a,
            })),
            InitialData::Step { a } => Expr::delta(1.0, 0.0).convolve_indicator(-a - 0.5, -a + 0.5).ok(),
            InitialData::Sampled { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            InitialData::Gaussian { a, variance } => {
                if !a.is_finite() || !(variance > 0.0) || !variance.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "Gaussian data needs finite center and variance > 0, got a={a}, variance={variance}"
                    )));
                }
            }
            InitialData::Step { a } => {
                if !a.is_finite() {
                    return Err(Error::InvalidInput(format!("step data needs a finite center, got {a}")));
                }
            }
            InitialData::Sampled { .. } => {}
        }
        Ok(())
    }
}

/// Four-point Lagrange interpolation (two-point at the ends), zero
/// outside the grid.
fn interp(grid: &UniformGrid, values: &[f64], x: f64) -> f64 {
    let h = grid.spacing();
    let n = values.len();
    if x < grid.min || x > grid.max || h == 0.0 {
        return 0.0;
    }
    let s = (x - grid.min) / h;
    let i = (s.floor() as usize).min(n - 2);
    let f = s - i as f64;
    if i == 0 || i + 2 >= n {
        return values[i] * (1.0 - f) + values[i + 1] * f;
    }
    let (a, b, c, d) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
    -f * (f - 1.0) * (f - 2.0) / 6.0 * a + (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0 * b
        - (f + 1.0) * f * (f - 2.0) / 2.0 * c
        + (f + 1.0) * f * (f - 1.0) / 6.0 * d
}

/// Result of [`evolve`]: a closed form or samples on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evolved {
    Closed { expr: Expr },
    Grid { grid: SpectralGrid },
}

impl Evolved {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Evolved::Closed { expr } => expr.value(x),
            Evolved::Grid { grid } => interp(&grid.x_grid, &grid.values, x),
        }
    }

    pub fn values(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.value(x)).collect()
    }

    pub fn expr(&self) -> Option<&Expr> {
        match self {
            Evolved::Closed { expr } => Some(expr),
            Evolved::Grid { .. } => None,
        }
    }

    /// Total mass: exact for closed forms, Simpson on grids.
    pub fn mass(&self) -> Result<f64> {
        match self {
            Evolved::Closed { expr } => expr.integrate_line(),
            Evolved::Grid { grid } => {
                let w = quad::simpson_weights(grid.values.len(), grid.x_grid.spacing());
                Ok(w.iter().zip(&grid.values).map(|(a, b)| a * b).sum())
            }
        }
    }
}

fn integer_alpha(params: &ModelParams) -> Result<()> {
    match params.resonance() {
        Resonance::General { alpha } => Err(Error::NonIntegerAlpha(alpha)),
        _ => Ok(()),
    }
}

/// The σ = 0 kernel in the `x̄` frame, atom included.
fn jump_kernel(params: &ModelParams, t: f64) -> Result<Expr> {
    let p0 = params.with_sigma(0.0)?;
    let k = kernel::fundamental(&p0, t, 0.0)?;
    Ok(k.regular
        .add(&Expr::delta(k.atom_weight, k.atom_center))
        .shift(-k.atom_center))
}

/// Closed-form Gaussian evolution (integer α, any σ).
pub fn evolve_gaussian(params: &ModelParams, a: f64, variance: f64, t: f64) -> Result<Expr> {
    check_time(t)?;
    integer_alpha(params)?;
    let tc = params.time_coeffs(t)?;
    let decay = (-params.beta() * t).exp();
    let total = tc.gaussian_variance() + variance * decay * decay;
    let k0 = jump_kernel(params, t)?;
    Ok(k0.convolve_gaussian(total)?.shift(a * decay - tc.a1))
}

/// Closed-form evolution of the indicator of `[-a - 1/2, -a + 1/2]`
/// (integer α, σ = 0).
pub fn evolve_step(params: &ModelParams, a: f64, t: f64) -> Result<Expr> {
    check_time(t)?;
    integer_alpha(params)?;
    if params.sigma() > 0.0 && t > 0.0 {
        return Err(Error::NoClosedForm(
            "step data with σ > 0 is evolved by quadrature (evolve_numeric)".into(),
        ));
    }
    let tc = params.time_coeffs(t)?;
    let decay = (-params.beta() * t).exp();
    let (u1, u2) = ((-a - 0.5) * decay, (-a + 0.5) * decay);
    let k0 = jump_kernel(params, t)?;
    Ok(k0.convolve_indicator(u1, u2)?.scale(1.0 / decay).shift(-tc.a1))
}

/// Closed form for Gaussian and step data, quadrature on the data's own
/// grid for sampled data.
pub fn evolve(params: &ModelParams, init: &InitialData, t: f64) -> Result<Evolved> {
    check_time(t)?;
    init.validate()?;
    match init {
        InitialData::Gaussian { a, variance } => Ok(Evolved::Closed {
            expr: evolve_gaussian(params, *a, *variance, t)?,
        }),
        InitialData::Step { a } => Ok(Evolved::Closed {
            expr: evolve_step(params, *a, t)?,
        }),
        InitialData::Sampled { grid, .. } => Ok(Evolved::Grid {
            grid: evolve_numeric(params, init, t, grid)?,
        }),
    }
}

/// Quadrature convolution of any initial data with the kernel, evaluated
/// on `out`. Works for every α (series kernel when α is not an integer).
pub fn evolve_numeric(params: &ModelParams, init: &InitialData, t: f64, out: &UniformGrid) -> Result<SpectralGrid> {
    check_time(t)?;
    init.validate()?;
    let xs = out.points();
    if t == 0.0 {
        return Ok(SpectralGrid {
            x_grid: *out,
            values: xs.iter().map(|&x| init.value(x)).collect(),
            err_estimate: 0.0,
            singular_subtracted: false,
            atom_weight: 0.0,
        });
    }
    let kr = kernel::fundamental(params, t, 0.0)?;
    let center = kr.atom_center;
    // smooth (σ > 0) or kinked-at-0 (σ = 0) continuous part in the x̄ frame
    let (cont, atom) = if params.sigma() > 0.0 {
        (kr.full().shift(-center), 0.0)
    } else {
        (kr.regular.shift(-center), kr.atom_weight)
    };
    let tc = params.time_coeffs(t)?;
    let decay = (-params.beta() * t).exp();
    let kinked = params.sigma() == 0.0;
    let res: Vec<(f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let z = x + tc.a1;
            let ystar = z / decay;
            let kern = |y: f64| cont.value(z - y * decay);
            let (v, e) = match init {
                InitialData::Sampled { grid, values } => {
                    sampled_integral(grid, values, &kern, if kinked { Some(ystar) } else { None })
                }
                InitialData::Gaussian { a, variance } => {
                    let s = variance.sqrt();
                    let mut br = vec![a - 14.0 * s, a + 14.0 * s];
                    if kinked {
                        br.push(ystar);
                    }
                    piecewise_gl(&|y| kern(y) * init.value(y), &mut br)
                }
                InitialData::Step { a } => {
                    let mut br = vec![-a - 0.5, -a + 0.5];
                    if kinked {
                        br.push(ystar);
                    }
                    piecewise_gl(&kern, &mut br)
                }
            };
            let push = if atom > 0.0 {
                atom * init.value(ystar) / decay
            } else {
                0.0
            };
            (v + push, e)
        })
        .collect();
    Ok(SpectralGrid {
        x_grid: *out,
        values: res.iter().map(|r| r.0).collect(),
        err_estimate: res.iter().map(|r| r.1).fold(0.0, f64::max),
        singular_subtracted: false,
        atom_weight: 0.0,
    })
}

/// Gauss–Legendre between consecutive breakpoints; only the breakpoints
/// inside `[br[0], br[1]]` are used.
fn piecewise_gl(f: &dyn Fn(f64) -> f64, br: &mut [f64]) -> (f64, f64) {
    let (lo, hi) = (br[0], br[1]);
    let mut pts: Vec<f64> = br.iter().copied().filter(|&b| b >= lo && b <= hi).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut v = 0.0;
    let mut e = 0.0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let r = quad::gl_adaptive(f, w[0], w[1], 1e-14);
            v += r.value;
            e += r.error;
        }
    }
    (v, e)
}

/// Simpson over the sample grid, with the cell containing the kernel kink
/// integrated separately on both sides of it (data interpolated inside
/// that cell).
fn sampled_integral(grid: &UniformGrid, values: &[f64], kern: &dyn Fn(f64) -> f64, kink: Option<f64>) -> (f64, f64) {
    let n = values.len();
    let h = grid.spacing();
    let ys = grid.points();
    let simpson = |from: usize, to: usize| -> f64 {
        // inclusive index range
        if to <= from {
            return 0.0;
        }
        let w = quad::simpson_weights(to - from + 1, h);
        (from..=to).map(|i| w[i - from] * kern(ys[i]) * values[i]).sum()
    };
    let trap = |from: usize, to: usize| -> f64 {
        (from..to)
            .map(|i| 0.5 * h * (kern(ys[i]) * values[i] + kern(ys[i + 1]) * values[i + 1]))
            .sum()
    };
    match kink {
        Some(s) if s > grid.min && s < grid.max => {
            let j = (((s - grid.min) / h).floor() as usize).min(n - 2);
            let f = |y: f64| kern(y) * interp(grid, values, y);
            let mid = quad::gl_composite(&f, ys[j], s, 1) + quad::gl_composite(&f, s, ys[j + 1], 1);
            let v = simpson(0, j) + mid + simpson(j + 1, n - 1);
            let coarse = trap(0, j) + mid + trap(j + 1, n - 1);
            (v, (v - coarse).abs())
        }
        _ => {
            let v = simpson(0, n - 1);
            (v, (v - trap(0, n - 1)).abs())
        }
    }
}

/// A location where some derivative of an expression jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discontinuity {
    pub location: f64,
    /// Lowest derivative order with a nonzero jump (0 = the function).
    pub order: u32,
    /// Right limit minus left limit of that derivative.
    pub jump: f64,
}

/// Jump of the `d`-th derivative of one term across its own break point.
fn term_jump(t: &BasisTerm, d: u32) -> Option<(f64, f64)> {
    // D^d [u^m e^{b u}] at u = 0 is C(d,m) m! b^{d-m} (0 when d < m)
    let at_zero = |m: u32, b: f64| -> f64 {
        if d < m {
            return 0.0;
        }
        let mut c = 1.0;
        for i in 0..m {
            c *= f64::from(d - i);
        }
        c * b.powi((d - m) as i32)
    };
    match *t {
        BasisTerm::ExpAbs {
            coeff,
            power,
            sign,
            decay,
            center,
        } => {
            let left_sign = if sign { -1.0 } else { 1.0 };
            let right = coeff * at_zero(power, -decay);
            let left = coeff * left_sign * at_zero(power, decay);
            Some((center, right - left))
        }
        BasisTerm::Step {
            coeff,
            power,
            orientation,
            rate,
            threshold,
        } => {
            let v = coeff * at_zero(power, rate);
            Some((threshold, if orientation > 0 { v } else { -v }))
        }
        _ => None,
    }
}

/// Kinks and jumps of an expression, read off its terms. Delta terms are
/// skipped; Gaussian and erfc terms are smooth and contribute nothing.
pub fn weak_discontinuity_report(e: &Expr) -> Vec<Discontinuity> {
    let mut locs: Vec<f64> = e
        .terms()
        .iter()
        .filter_map(|t| term_jump(t, 0).map(|(c, _)| c))
        .collect();
    locs.sort_by(f64::total_cmp);
    locs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    let max_order = e.terms().iter().map(|t| t.power()).max().unwrap_or(0) + 2;
    let mut out = Vec::new();
    for &loc in &locs {
        for d in 0..=max_order {
            let (mut jump, mut scale) = (0.0, 0.0);
            for t in e.terms() {
                if let Some((c, j)) = term_jump(t, d) {
                    if (c - loc).abs() <= 1e-12 * loc.abs().max(1.0) {
                        jump += j;
                        scale += j.abs();
                    }
                }
            }
            if jump.abs() > 1e-12 * scale && jump != 0.0 {
                out.push(Discontinuity {
                    location: loc,
                    order: d,
                    jump,
                });
                break;
            }
        }
    }
    out
}
