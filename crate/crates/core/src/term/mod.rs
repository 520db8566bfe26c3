//! A small algebra of functions closed under distributional
//! differentiation, translation, Gaussian and Laplace convolution, and
//! integration over the line.
//!
//! Every term is written in its local coordinate `u = x - center`:
//!
//! | variant   | value                                           |
//! |-----------|-------------------------------------------------|
//! | `Delta`   | `w δ(u)`                                        |
//! | `ExpAbs`  | `c u^m sign(u)^ε e^{-k|u|}`                     |
//! | `Gauss`   | `c u^m e^{a u^2 + b u}`, `a < 0`                |
//! | `ErfcExp` | `c u^m e^{b u} erfc(p u + q)`                   |
//! | `Step`    | `c u^m Θ(o u) e^{r u}`, `o = ±1`                |
//!
//! The complementary error function is used instead of `Erf` so that each
//! term decays on its own; `Erf = 1 - erfc` rewrites any `Erf` expression
//! into this basis.

mod conv;
mod integral;
pub(crate) mod poly;

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

pub use integral::Moments;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisTerm {
    Delta {
        weight: f64,
        center: f64,
    },
    ExpAbs {
        coeff: f64,
        power: u32,
        sign: bool,
        decay: f64,
        center: f64,
    },
    Gauss {
        coeff: f64,
        power: u32,
        quad: f64,
        lin: f64,
        center: f64,
    },
    ErfcExp {
        coeff: f64,
        power: u32,
        rate: f64,
        slope: f64,
        offset: f64,
        center: f64,
    },
    Step {
        coeff: f64,
        power: u32,
        /// `+1` for `Θ(x - threshold)`, `-1` for `Θ(threshold - x)`.
        orientation: i8,
        rate: f64,
        threshold: f64,
    },
}

/// A point mass reported alongside a pointwise value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub atoms: Vec<Atom>,
}

impl BasisTerm {
    pub fn coeff(&self) -> f64 {
        match *self {
            BasisTerm::Delta { weight, .. } => weight,
            BasisTerm::ExpAbs { coeff, .. }
            | BasisTerm::Gauss { coeff, .. }
            | BasisTerm::ErfcExp { coeff, .. }
            | BasisTerm::Step { coeff, .. } => coeff,
        }
    }

    fn coeff_mut(&mut self) -> &mut f64 {
        match self {
            BasisTerm::Delta { weight, .. } => weight,
            BasisTerm::ExpAbs { coeff, .. }
            | BasisTerm::Gauss { coeff, .. }
            | BasisTerm::ErfcExp { coeff, .. }
            | BasisTerm::Step { coeff, .. } => coeff,
        }
    }

    pub fn center(&self) -> f64 {
        match *self {
            BasisTerm::Delta { center, .. }
            | BasisTerm::ExpAbs { center, .. }
            | BasisTerm::Gauss { center, .. }
            | BasisTerm::ErfcExp { center, .. } => center,
            BasisTerm::Step { threshold, .. } => threshold,
        }
    }

    fn center_mut(&mut self) -> &mut f64 {
        match self {
            BasisTerm::Delta { center, .. }
            | BasisTerm::ExpAbs { center, .. }
            | BasisTerm::Gauss { center, .. }
            | BasisTerm::ErfcExp { center, .. } => center,
            BasisTerm::Step { threshold, .. } => threshold,
        }
    }

    pub fn is_delta(&self) -> bool {
        matches!(self, BasisTerm::Delta { .. })
    }

    pub(crate) fn power(&self) -> u32 {
        match *self {
            BasisTerm::Delta { .. } => 0,
            BasisTerm::ExpAbs { power, .. }
            | BasisTerm::Gauss { power, .. }
            | BasisTerm::ErfcExp { power, .. }
            | BasisTerm::Step { power, .. } => power,
        }
    }

    pub(crate) fn with_power(&self, m: u32) -> BasisTerm {
        let mut t = *self;
        match &mut t {
            BasisTerm::Delta { .. } => {}
            BasisTerm::ExpAbs { power, .. }
            | BasisTerm::Gauss { power, .. }
            | BasisTerm::ErfcExp { power, .. }
            | BasisTerm::Step { power, .. } => *power = m,
        }
        t
    }

    pub fn with_coeff(&self, c: f64) -> BasisTerm {
        let mut t = *self;
        *t.coeff_mut() = c;
        t
    }

    fn variant_rank(&self) -> u8 {
        match self {
            BasisTerm::Delta { .. } => 0,
            BasisTerm::ExpAbs { .. } => 1,
            BasisTerm::Gauss { .. } => 2,
            BasisTerm::ErfcExp { .. } => 3,
            BasisTerm::Step { .. } => 4,
        }
    }

    /// Every parameter except the coefficient, in a fixed order.
    fn shape_key(&self) -> [f64; 5] {
        match *self {
            BasisTerm::Delta { center, .. } => [center, 0.0, 0.0, 0.0, 0.0],
            BasisTerm::ExpAbs {
                power,
                sign,
                decay,
                center,
                ..
            } => [center, f64::from(power), f64::from(u8::from(sign)), decay, 0.0],
            BasisTerm::Gauss {
                power,
                quad,
                lin,
                center,
                ..
            } => [center, f64::from(power), quad, lin, 0.0],
            BasisTerm::ErfcExp {
                power,
                rate,
                slope,
                offset,
                center,
                ..
            } => [center, f64::from(power), rate, slope, offset],
            BasisTerm::Step {
                power,
                orientation,
                rate,
                threshold,
                ..
            } => [threshold, f64::from(power), f64::from(orientation), rate, 0.0],
        }
    }

    fn same_shape(&self, other: &BasisTerm) -> bool {
        self.variant_rank() == other.variant_rank()
            && self
                .shape_key()
                .iter()
                .zip(other.shape_key().iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    fn shape_cmp(&self, other: &BasisTerm) -> Ordering {
        self.variant_rank().cmp(&other.variant_rank()).then_with(|| {
            self.shape_key()
                .iter()
                .zip(other.shape_key().iter())
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }

    /// Pointwise value of the absolutely continuous part; deltas give 0.
    pub fn value(&self, x: f64) -> f64 {
        let u = x - self.center();
        match *self {
            BasisTerm::Delta { .. } => 0.0,
            BasisTerm::ExpAbs {
                coeff,
                power,
                sign,
                decay,
                ..
            } => {
                let s = if sign { sign0(u) } else { 1.0 };
                coeff * powu(u, power) * s * (-decay * u.abs()).exp()
            }
            BasisTerm::Gauss {
                coeff,
                power,
                quad,
                lin,
                ..
            } => coeff * powu(u, power) * (quad * u * u + lin * u).exp(),
            BasisTerm::ErfcExp {
                coeff,
                power,
                rate,
                slope,
                offset,
                ..
            } => coeff * powu(u, power) * special::exp_erfc(rate * u, slope * u + offset),
            BasisTerm::Step {
                coeff,
                power,
                orientation,
                rate,
                ..
            } => {
                let ou = f64::from(orientation) * u;
                let h = if ou > 0.0 {
                    1.0
                } else if ou == 0.0 {
                    0.5
                } else {
                    return 0.0;
                };
                coeff * h * powu(u, power) * (rate * u).exp()
            }
        }
    }

    /// Distributional derivative, appended to `out`.
    fn differentiate_into(&self, out: &mut Vec<BasisTerm>) -> Result<()> {
        let m = self.power();
        match *self {
            BasisTerm::Delta { .. } => return Err(Error::DeltaDerivative),
            BasisTerm::ExpAbs {
                coeff,
                sign,
                decay,
                center,
                ..
            } => {
                if m >= 1 {
                    out.push(self.with_power(m - 1).with_coeff(coeff * f64::from(m)));
                } else if sign {
                    // d/du sign(u) = 2 δ(u); u^m δ(u) = 0 for m >= 1
                    out.push(BasisTerm::Delta {
                        weight: 2.0 * coeff,
                        center,
                    });
                }
                // -k sign(u) e^{-k|u|} times u^m sign^ε, with sign^2 = 1
                out.push(BasisTerm::ExpAbs {
                    coeff: -decay * coeff,
                    power: m,
                    sign: !sign,
                    decay,
                    center,
                });
            }
            BasisTerm::Gauss { coeff, quad, lin, .. } => {
                if m >= 1 {
                    out.push(self.with_power(m - 1).with_coeff(coeff * f64::from(m)));
                }
                out.push(self.with_power(m + 1).with_coeff(2.0 * quad * coeff));
                out.push(self.with_coeff(lin * coeff));
            }
            BasisTerm::ErfcExp {
                coeff,
                rate,
                slope,
                offset,
                center,
                ..
            } => {
                if m >= 1 {
                    out.push(self.with_power(m - 1).with_coeff(coeff * f64::from(m)));
                }
                out.push(self.with_coeff(rate * coeff));
                // d/du erfc(p u + q) = -(2p/sqrt(pi)) e^{-(p u + q)^2}
                out.push(BasisTerm::Gauss {
                    coeff: -coeff * 2.0 * slope / PI.sqrt() * (-offset * offset).exp(),
                    power: m,
                    quad: -slope * slope,
                    lin: rate - 2.0 * slope * offset,
                    center,
                });
            }
            BasisTerm::Step { .. } => return Err(Error::Unsupported("differentiation of step-wrapped terms".into())),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            BasisTerm::Delta { weight, center } => weight.is_finite() && center.is_finite(),
            BasisTerm::ExpAbs {
                coeff, decay, center, ..
            } => coeff.is_finite() && decay > 0.0 && decay.is_finite() && center.is_finite(),
            BasisTerm::Gauss {
                coeff,
                quad,
                lin,
                center,
                ..
            } => coeff.is_finite() && quad < 0.0 && quad.is_finite() && lin.is_finite() && center.is_finite(),
            BasisTerm::ErfcExp {
                coeff,
                rate,
                slope,
                offset,
                center,
                ..
            } => {
                coeff.is_finite()
                    && rate.is_finite()
                    && slope != 0.0
                    && slope.is_finite()
                    && offset.is_finite()
                    && center.is_finite()
            }
            BasisTerm::Step {
                coeff,
                orientation,
                rate,
                threshold,
                ..
            } => {
                coeff.is_finite()
                    && (orientation == 1 || orientation == -1)
                    && rate.is_finite()
                    && threshold.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("malformed term {self:?}")))
        }
    }
}

fn sign0(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn powu(u: f64, m: u32) -> f64 {
    match m {
        0 => 1.0,
        1 => u,
        _ => u.powi(m as i32),
    }
}

/// A finite linear combination of [`BasisTerm`]s in canonical form: terms
/// with bitwise-identical shape parameters are merged, zero coefficients
/// are dropped, and the list is sorted by shape.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Expr {
    terms: Vec<BasisTerm>,
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            terms: Vec<BasisTerm>,
        }
        let raw = Raw::deserialize(d)?;
        Expr::try_from_terms(raw.terms).map_err(serde::de::Error::custom)
    }
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: Vec::new() }
    }

    /// Canonicalizes arbitrary terms. Panics on malformed terms; use
    /// [`Expr::try_from_terms`] for untrusted input.
    pub fn from_terms(terms: Vec<BasisTerm>) -> Self {
        Self::try_from_terms(terms).expect("malformed basis term")
    }

    pub fn try_from_terms(terms: Vec<BasisTerm>) -> Result<Self> {
        for t in &terms {
            t.validate()?;
        }
        Ok(Self::canonical(terms))
    }

    pub fn term(t: BasisTerm) -> Self {
        Self::from_terms(vec![t])
    }

    pub fn delta(weight: f64, center: f64) -> Self {
        Self::term(BasisTerm::Delta { weight, center })
    }

    /// `coeff e^{-k|x - center|}`.
    pub fn exp_abs(coeff: f64, decay: f64, center: f64) -> Self {
        Self::term(BasisTerm::ExpAbs {
            coeff,
            power: 0,
            sign: false,
            decay,
            center,
        })
    }

    fn canonical(mut terms: Vec<BasisTerm>) -> Self {
        terms.retain(|t| t.coeff() != 0.0);
        // stable sort keeps the summation order of equal shapes deterministic
        terms.sort_by(|a, b| a.shape_cmp(b));
        let mut out: Vec<BasisTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if last.same_shape(&t) => {
                    *last.coeff_mut() += t.coeff();
                }
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coeff() != 0.0);
        Expr { terms: out }
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Expr) -> Expr {
        let mut t = self.terms.clone();
        t.extend_from_slice(&other.terms);
        Self::canonical(t)
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Expr {
        Self::canonical(self.terms.iter().map(|t| t.with_coeff(t.coeff() * s)).collect())
    }

    /// `e(x - c)`: every center moves by `c`.
    pub fn shift(&self, c: f64) -> Expr {
        Self::canonical(
            self.terms
                .iter()
                .map(|t| {
                    let mut t = *t;
                    *t.center_mut() += c;
                    t
                })
                .collect(),
        )
    }

    pub fn regular_part(&self) -> Expr {
        Expr {
            terms: self.terms.iter().filter(|t| !t.is_delta()).copied().collect(),
        }
    }

    pub fn atoms(&self) -> Vec<Atom> {
        self.terms
            .iter()
            .filter_map(|t| match *t {
                BasisTerm::Delta { weight, center } => Some(Atom { weight, center }),
                _ => None,
            })
            .collect()
    }

    pub fn split(&self) -> (Expr, Vec<Atom>) {
        (self.regular_part(), self.atoms())
    }

    pub fn has_delta(&self) -> bool {
        self.terms.iter().any(BasisTerm::is_delta)
    }

    pub fn has_steps(&self) -> bool {
        self.terms.iter().any(|t| matches!(t, BasisTerm::Step { .. }))
    }

    pub fn has_erfc(&self) -> bool {
        self.terms.iter().any(|t| matches!(t, BasisTerm::ErfcExp { .. }))
    }

    /// Value of the regular part at `x`.
    pub fn value(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.value(x)).sum()
    }

    pub fn values(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.value(x)).collect()
    }

    pub fn evaluate(&self, x: f64) -> Evaluation {
        Evaluation {
            value: self.value(x),
            atoms: self.atoms(),
        }
    }

    pub fn differentiate(&self) -> Result<Expr> {
        let mut out = Vec::with_capacity(self.terms.len() * 3);
        for t in &self.terms {
            t.differentiate_into(&mut out)?;
        }
        Ok(Self::canonical(out))
    }

    pub fn differentiate_n(&self, n: u32) -> Result<Expr> {
        let mut e = self.clone();
        for _ in 0..n {
            e = e.differentiate()?;
        }
        Ok(e)
    }
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul<f64> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: f64) -> Expr {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests;
