use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::poly;
use super::{powu, BasisTerm, Expr};
use crate::error::{Error, Result};
use crate::special;

/// Raw moments `∫ x^j e(x) dx`, `j = 0, 1, 2`, atoms included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mass: f64,
    pub first: f64,
    pub second: f64,
}

impl Moments {
    pub fn mean(&self) -> f64 {
        self.first / self.mass
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second / self.mass - m * m
    }
}

impl Expr {
    /// `∫_R e(x) dx`, delta weights included.
    ///
    /// Pure steps (rate 0) are not integrable one by one; their divergent
    /// parts must cancel across the expression, which is checked.
    pub fn integrate_line(&self) -> Result<f64> {
        self.moment(0)
    }

    /// `∫ x^j e(x) dx` for `j <= 2`.
    pub fn moment(&self, order: u32) -> Result<f64> {
        if order > 2 {
            return Err(Error::Unsupported(format!("moments of order {order} (at most 2)")));
        }
        self.raw_moment(order)
    }

    pub fn moments(&self) -> Result<Moments> {
        Ok(Moments {
            mass: self.moment(0)?,
            first: self.moment(1)?,
            second: self.moment(2)?,
        })
    }

    pub(crate) fn raw_moment(&self, order: u32) -> Result<f64> {
        let mut total = 0.0;
        let mut divergent = 0.0;
        let mut scale = 0.0f64;
        for t in &self.terms {
            match *t {
                BasisTerm::Delta { weight, center } => total += weight * powu(center, order),
                BasisTerm::Step {
                    coeff,
                    power: 0,
                    orientation,
                    rate,
                    threshold,
                } if rate == 0.0 => {
                    // finite part of the integral over [-R, R] in absolute x
                    let j1 = f64::from(order + 1);
                    let tp = powu(threshold, order + 1) / j1;
                    if orientation > 0 {
                        total -= coeff * tp;
                        divergent += coeff;
                    } else {
                        total += coeff * tp;
                        divergent -= coeff * if order.is_multiple_of(2) { -1.0 } else { 1.0 };
                    }
                    scale = scale.max(coeff.abs());
                }
                _ => {
                    let c = t.center();
                    for i in 0..=order {
                        let w = poly::binom(order, i) * powu(c, order - i);
                        total += w * term_integral(&t.with_power(t.power() + i))?;
                    }
                }
            }
        }
        if divergent.abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "expression is not integrable: unit steps do not cancel (net {divergent})"
            )));
        }
        Ok(total)
    }

    /// `∫_{-∞}^{x} e(s) ds`, atoms at or left of `x` included.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let mut total = 0.0;
        let mut divergent = 0.0;
        let mut scale = 0.0f64;
        for t in &self.terms {
            match *t {
                BasisTerm::Delta { weight, center } => {
                    if center <= x {
                        total += weight;
                    }
                }
                BasisTerm::Step {
                    coeff,
                    power: 0,
                    orientation,
                    rate,
                    threshold,
                } if rate == 0.0 => {
                    if orientation > 0 {
                        total += coeff * (x - threshold).max(0.0);
                    } else {
                        total += coeff * x.min(threshold);
                        divergent += coeff;
                    }
                    scale = scale.max(coeff.abs());
                }
                _ => total += term_cdf(t, x - t.center())?,
            }
        }
        if divergent.abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "cumulative integral diverges: left unit steps do not cancel (net {divergent})"
            )));
        }
        Ok(total)
    }

    /// `x^j e(x)` with `x` the absolute coordinate.
    pub fn multiply_monomial(&self, j: u32) -> Expr {
        let mut out = Vec::new();
        for t in &self.terms {
            let c = t.center();
            match *t {
                BasisTerm::Delta { weight, center } => out.push(BasisTerm::Delta {
                    weight: weight * powu(center, j),
                    center,
                }),
                _ => {
                    for i in 0..=j {
                        let w = poly::binom(j, i) * powu(c, j - i);
                        if w != 0.0 {
                            out.push(t.with_power(t.power() + i).with_coeff(t.coeff() * w));
                        }
                    }
                }
            }
        }
        Expr::canonical(out)
    }
}

fn not_integrable(t: &BasisTerm) -> Error {
    Error::InvalidInput(format!("term is not integrable over the line: {t:?}"))
}

/// `∫ p(u) e^{a u^2 + b u + l} du` over the line, `a < 0`.
fn gauss_poly_integral(p: &[f64], a: f64, b: f64, l: f64) -> f64 {
    let g = -a;
    let u0 = b / (2.0 * g);
    let c0 = b * b / (4.0 * g);
    // in r = u - u0, p(u0 + r) against e^{-g r^2}
    let shifted = poly::shift(p, u0);
    let mut acc = 0.0;
    for (i, &c) in shifted.iter().enumerate() {
        if i % 2 == 0 && c != 0.0 {
            acc += c * special::half_gamma_even(i as u32) * g.powf(-(i as f64 + 1.0) / 2.0);
        }
    }
    acc * (l + c0).exp()
}

/// `∫_{-∞}^{U} p(u) e^{a u^2 + b u + l} du`, `a < 0`.
fn gauss_poly_cdf(p: &[f64], a: f64, b: f64, l: f64, upper: f64) -> f64 {
    if upper == f64::INFINITY {
        return gauss_poly_integral(p, a, b, l);
    }
    if upper == f64::NEG_INFINITY {
        return 0.0;
    }
    let g = -a;
    let u0 = b / (2.0 * g);
    let c0 = b * b / (4.0 * g);
    let r = upper - u0;
    let shifted = poly::shift(p, u0);
    // J_i(R) = ja_i * (1/2) sqrt(pi/g) erfc(-R sqrt g) + jb_i * e^{-g R^2}
    let n = shifted.len();
    let mut ja = vec![0.0; n.max(2)];
    let mut jb = vec![0.0; n.max(2)];
    ja[0] = 1.0;
    jb[1] = -1.0 / (2.0 * g);
    for i in 2..n {
        let f = (i as f64 - 1.0) / (2.0 * g);
        ja[i] = f * ja[i - 2];
        jb[i] = -powu(r, i as u32 - 1) / (2.0 * g) + f * jb[i - 2];
    }
    let mut sa = 0.0;
    let mut sb = 0.0;
    for (i, &c) in shifted.iter().enumerate() {
        sa += c * ja[i];
        sb += c * jb[i];
    }
    let e = l + c0;
    let mut out = 0.0;
    if sa != 0.0 {
        out += sa * 0.5 * (PI / g).sqrt() * special::exp_erfc(e, -r * g.sqrt());
    }
    if sb != 0.0 {
        out += sb * (e - g * r * r).exp();
    }
    out
}

/// `∫ u^m e^{b u} du` on `[0, U]` as `P(U)e^{bU} - P(0)`, or the plain
/// power integral when `b = 0`.
fn exp_power_definite(m: u32, b: f64, upper: f64) -> f64 {
    if b == 0.0 {
        return powu(upper, m + 1) / f64::from(m + 1);
    }
    let p = poly::exp_antiderivative(m, b);
    let at_u = if upper.is_infinite() {
        0.0
    } else {
        poly::eval(&p, upper) * (b * upper).exp()
    };
    at_u - p[0]
}

pub(crate) fn term_integral(t: &BasisTerm) -> Result<f64> {
    let v = match *t {
        BasisTerm::Delta { weight, .. } => weight,
        BasisTerm::ExpAbs {
            coeff,
            power,
            sign,
            decay,
            ..
        } => {
            if (power + u32::from(sign)) % 2 == 1 {
                0.0
            } else {
                2.0 * coeff * special::factorial(power) / decay.powi(power as i32 + 1)
            }
        }
        BasisTerm::Gauss {
            coeff,
            power,
            quad,
            lin,
            ..
        } => gauss_poly_integral(&poly::monomial(power, coeff), quad, lin, 0.0),
        BasisTerm::ErfcExp {
            coeff,
            power,
            rate,
            slope,
            offset,
            ..
        } => {
            // decays at both ends iff rate and slope have the same sign
            if !(rate * slope > 0.0) {
                return Err(not_integrable(t));
            }
            // by parts: the boundary terms vanish, leaving
            // (2p/sqrt(pi)) ∫ P(u) e^{bu} e^{-(pu+q)^2} du
            let p = poly::exp_antiderivative(power, rate);
            let scaled: Vec<f64> = p.iter().map(|c| c * coeff * 2.0 * slope / PI.sqrt()).collect();
            gauss_poly_integral(&scaled, -slope * slope, rate - 2.0 * slope * offset, -offset * offset)
        }
        BasisTerm::Step {
            coeff,
            power,
            orientation,
            rate,
            ..
        } => {
            if !(f64::from(orientation) * rate < 0.0) {
                return Err(not_integrable(t));
            }
            let inf = f64::from(orientation) * f64::INFINITY;
            f64::from(orientation) * coeff * exp_power_definite(power, rate, inf)
        }
    };
    Ok(v)
}

/// One-sided integral up to local coordinate `upper`.
pub(crate) fn term_cdf(t: &BasisTerm, upper: f64) -> Result<f64> {
    let v = match *t {
        BasisTerm::Delta { weight, .. } => {
            if upper >= 0.0 {
                weight
            } else {
                0.0
            }
        }
        BasisTerm::ExpAbs {
            coeff,
            power,
            sign,
            decay,
            ..
        } => {
            let m = power;
            let parity = if (m + u32::from(sign)) % 2 == 0 { 1.0 } else { -1.0 };
            let half = special::factorial(m) / decay.powi(m as i32 + 1);
            // Γ_up(a) = ∫_a^∞ r^m e^{-k r} dr
            let upper_tail = |a: f64| {
                if a == f64::INFINITY {
                    return 0.0;
                }
                let p = poly::exp_antiderivative(m, -decay);
                -poly::eval(&p, a) * (-decay * a).exp()
            };
            if upper <= 0.0 {
                coeff * parity * upper_tail(-upper)
            } else {
                coeff * (parity * half + half - upper_tail(upper))
            }
        }
        BasisTerm::Gauss {
            coeff,
            power,
            quad,
            lin,
            ..
        } => gauss_poly_cdf(&poly::monomial(power, coeff), quad, lin, 0.0, upper),
        BasisTerm::ErfcExp {
            coeff,
            power,
            rate,
            slope,
            offset,
            ..
        } => {
            // left end must decay: erfc -> 0 (slope < 0) or e^{bu} -> 0 (rate > 0)
            if !(slope < 0.0 || rate > 0.0) {
                return Err(not_integrable(t));
            }
            if rate == 0.0 {
                // only reachable with slope < 0; integrate erfc by parts with u^{m+1}/(m+1)
                let p = poly::monomial(power + 1, coeff / f64::from(power + 1));
                let boundary = if upper.is_infinite() {
                    return Err(not_integrable(t));
                } else {
                    poly::eval(&p, upper) * special::erfc(slope * upper + offset)
                };
                let scaled: Vec<f64> = p.iter().map(|c| c * 2.0 * slope / PI.sqrt()).collect();
                boundary + gauss_poly_cdf(&scaled, -slope * slope, -2.0 * slope * offset, -offset * offset, upper)
            } else {
                let p = poly::exp_antiderivative(power, rate);
                let boundary = if upper == f64::INFINITY {
                    if !(rate * slope > 0.0) {
                        return Err(not_integrable(t));
                    }
                    0.0
                } else {
                    coeff * poly::eval(&p, upper) * special::exp_erfc(rate * upper, slope * upper + offset)
                };
                let scaled: Vec<f64> = p.iter().map(|c| c * coeff * 2.0 * slope / PI.sqrt()).collect();
                boundary
                    + gauss_poly_cdf(
                        &scaled,
                        -slope * slope,
                        rate - 2.0 * slope * offset,
                        -offset * offset,
                        upper,
                    )
            }
        }
        BasisTerm::Step {
            coeff,
            power,
            orientation,
            rate,
            ..
        } => {
            if orientation > 0 {
                if upper <= 0.0 {
                    0.0
                } else {
                    if upper.is_infinite() && !(rate < 0.0) {
                        return Err(not_integrable(t));
                    }
                    coeff * exp_power_definite(power, rate, upper)
                }
            } else {
                if !(rate > 0.0) {
                    return Err(not_integrable(t));
                }
                // ∫_{-∞}^{min(U,0)} u^m e^{ru} du = P(min(U,0)) e^{r min(U,0)}
                let p = poly::exp_antiderivative(power, rate);
                let top = upper.min(0.0);
                coeff * poly::eval(&p, top) * (rate * top).exp()
            }
        }
    };
    Ok(v)
}
