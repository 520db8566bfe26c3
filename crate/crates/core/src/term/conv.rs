use std::f64::consts::PI;

use super::poly;
use super::{BasisTerm, Expr};
use crate::error::{Error, Result};
use crate::special;

impl Expr {
    /// Convolution with the centred normal density of variance `v`.
    pub fn convolve_gaussian(&self, v: f64) -> Result<Expr> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Gaussian convolution needs variance > 0, got {v}"
            )));
        }
        let mut out = Vec::new();
        for t in &self.terms {
            match *t {
                BasisTerm::Delta { weight, center } => out.push(BasisTerm::Gauss {
                    coeff: weight / (2.0 * PI * v).sqrt(),
                    power: 0,
                    quad: -0.5 / v,
                    lin: 0.0,
                    center,
                }),
                BasisTerm::ExpAbs {
                    coeff,
                    power,
                    sign,
                    decay,
                    center,
                } => exp_abs_gauss(coeff, power, sign, decay, center, v, &mut out),
                BasisTerm::Gauss {
                    coeff,
                    power,
                    quad,
                    lin,
                    center,
                } => gauss_gauss(coeff, power, quad, lin, center, v, &mut out),
                BasisTerm::ErfcExp { .. } => {
                    return Err(Error::Unsupported("Gaussian convolution of erfc terms".into()))
                }
                BasisTerm::Step { .. } => {
                    return Err(Error::Unsupported("Gaussian convolution of step-wrapped terms".into()))
                }
            }
        }
        Ok(Expr::canonical(out))
    }

    /// Convolution with the jump density `(k/2) e^{-k|x|}`.
    ///
    /// Supported for deltas and for `ExpAbs` terms whose decay equals `k`,
    /// which covers every kernel produced for the jump-free diffusion case.
    pub fn convolve_laplace(&self, k: f64) -> Result<Expr> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidInput(format!("Laplace scale must be > 0, got {k}")));
        }
        let mut out = Vec::new();
        for t in &self.terms {
            match *t {
                BasisTerm::Delta { weight, center } => out.push(BasisTerm::ExpAbs {
                    coeff: weight * 0.5 * k,
                    power: 0,
                    sign: false,
                    decay: k,
                    center,
                }),
                BasisTerm::ExpAbs {
                    coeff,
                    power,
                    sign,
                    decay,
                    center,
                } if decay == k => laplace_same_decay(coeff, power, sign, k, center, &mut out),
                _ => {
                    return Err(Error::Unsupported(format!(
                        "Laplace convolution of {t:?} (only deltas and e^{{-k|x|}} terms with the kernel's decay)"
                    )))
                }
            }
        }
        Ok(Expr::canonical(out))
    }

    /// Convolution with the indicator of `[lo, hi]`, i.e.
    /// `x ↦ ∫_lo^hi f(x - s) ds = F(x - lo) - F(x - hi)` for an
    /// antiderivative `F`. Supported for deltas and `ExpAbs` terms; the
    /// result is a sum of `Step` terms.
    pub fn convolve_indicator(&self, lo: f64, hi: f64) -> Result<Expr> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "indicator needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        let mut out = Vec::new();
        for t in &self.terms {
            let mut anti = Vec::new();
            match *t {
                BasisTerm::Delta { weight, center } => anti.push(BasisTerm::Step {
                    coeff: weight,
                    power: 0,
                    orientation: 1,
                    rate: 0.0,
                    threshold: center,
                }),
                BasisTerm::ExpAbs {
                    coeff,
                    power,
                    sign,
                    decay,
                    center,
                } => exp_abs_antiderivative(coeff, power, sign, decay, center, &mut anti),
                _ => {
                    return Err(Error::Unsupported(format!(
                        "indicator convolution of {t:?} (only deltas and e^{{-k|x|}} terms)"
                    )))
                }
            }
            for (shift, sgn) in [(lo, 1.0), (hi, -1.0)] {
                for a in &anti {
                    if let BasisTerm::Step {
                        coeff,
                        power,
                        orientation,
                        rate,
                        threshold,
                    } = *a
                    {
                        out.push(BasisTerm::Step {
                            coeff: sgn * coeff,
                            power,
                            orientation,
                            rate,
                            threshold: threshold + shift,
                        });
                    }
                }
            }
        }
        Ok(Expr::canonical(out))
    }
}

/// Antiderivative of `c u^m sign(u)^ε e^{-k|u|}` vanishing at `-∞`:
/// `Θ(-u) P₋(u) e^{ku} + Θ(u) [P₊(u) e^{-ku} + P₋(0) - P₊(0)]`.
fn exp_abs_antiderivative(c: f64, m: u32, sign: bool, k: f64, center: f64, out: &mut Vec<BasisTerm>) {
    // on u < 0 the term is c (-1)^ε u^m e^{ku}
    let s = if sign { -1.0 } else { 1.0 };
    let pm: Vec<f64> = poly::exp_antiderivative(m, k).iter().map(|a| a * c * s).collect();
    let pp: Vec<f64> = poly::exp_antiderivative(m, -k).iter().map(|a| a * c).collect();
    for (j, &a) in pm.iter().enumerate() {
        if a != 0.0 {
            out.push(BasisTerm::Step {
                coeff: a,
                power: j as u32,
                orientation: -1,
                rate: k,
                threshold: center,
            });
        }
    }
    for (j, &a) in pp.iter().enumerate() {
        if a != 0.0 {
            out.push(BasisTerm::Step {
                coeff: a,
                power: j as u32,
                orientation: 1,
                rate: -k,
                threshold: center,
            });
        }
    }
    let jump = pm[0] - pp[0];
    if jump != 0.0 {
        out.push(BasisTerm::Step {
            coeff: jump,
            power: 0,
            orientation: 1,
            rate: 0.0,
            threshold: center,
        });
    }
}

/// `c u^m sign(u)^ε e^{-k|u|} * N_v`.
///
/// Writes `f = f+ + (-1)^{m+ε} f+(-.)` with `f+(u) = u^m e^{-k u} Θ(u)`;
/// `(f+ * N)(x) = e^{-kx + k^2 v/2} E[(μ + R)^m ; R > -μ]` with `R ~ N(0, v)`
/// and `μ = x - k v`, which splits into an erfc part and a Gaussian part.
fn exp_abs_gauss(c: f64, m: u32, sign: bool, k: f64, center: f64, v: f64, out: &mut Vec<BasisTerm>) {
    let mi = m as usize;
    // truncated normal moments T_i = alpha_i * (1/2) erfc(-μ/sqrt(2v)) + beta_i(μ) φ_v(μ)
    let mut alpha = vec![0.0; mi + 1];
    let mut beta: Vec<Vec<f64>> = vec![Vec::new(); mi + 1];
    alpha[0] = 1.0;
    if mi >= 1 {
        beta[1] = vec![v];
    }
    for i in 2..=mi {
        alpha[i] = (i as f64 - 1.0) * v * alpha[i - 2];
        // v (-μ)^{i-1} + (i-1) v beta_{i-2}
        let mut b = poly::monomial(i as u32 - 1, v * if (i - 1) % 2 == 0 { 1.0 } else { -1.0 });
        let prev = beta[i - 2].clone();
        poly::add_into(&mut b, &prev, (i as f64 - 1.0) * v);
        beta[i] = b;
    }
    // A(μ) = sum_i C(m,i) μ^{m-i} alpha_i,  Bp(μ) = sum_i C(m,i) μ^{m-i} beta_i(μ)
    let mut a_mu = vec![0.0; mi + 1];
    let mut b_mu = Vec::new();
    for i in 0..=mi {
        let bc = poly::binom(m, i as u32);
        a_mu[mi - i] += bc * alpha[i];
        if !beta[i].is_empty() {
            let shifted = poly::mul(&poly::monomial((mi - i) as u32, bc), &beta[i]);
            poly::add_into(&mut b_mu, &shifted, 1.0);
        }
    }
    // as polynomials in x via μ = x - k v
    let a_x = poly::shift(&a_mu, -k * v);
    let b_x = poly::shift(&b_mu, -k * v);
    let mirror = if (m + u32::from(sign)).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    let sq = (2.0 * v).sqrt();
    let erfc_scale = 0.5 * c * (0.5 * k * k * v).exp();
    let gauss_scale = c / (2.0 * PI * v).sqrt();
    let q = k * (0.5 * v).sqrt();

    // direct part: e^{-kx} erfc(-(x - k v)/sqrt(2v)) A(x - kv)
    for (j, &a) in a_x.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        out.push(BasisTerm::ErfcExp {
            coeff: erfc_scale * a,
            power: j as u32,
            rate: -k,
            slope: -1.0 / sq,
            offset: q,
            center,
        });
        // mirrored: the same evaluated at -x
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        out.push(BasisTerm::ErfcExp {
            coeff: mirror * s * erfc_scale * a,
            power: j as u32,
            rate: k,
            slope: 1.0 / sq,
            offset: q,
            center,
        });
    }
    let b_ref = poly::reflect(&b_x);
    for j in 0..b_x.len() {
        let coeff = gauss_scale * (b_x[j] + mirror * b_ref[j]);
        if coeff == 0.0 {
            continue;
        }
        out.push(BasisTerm::Gauss {
            coeff,
            power: j as u32,
            quad: -0.5 / v,
            lin: 0.0,
            center,
        });
    }
}

/// `c u^m e^{a u^2 + b u} * N_v` by completing the square in the
/// integration variable.
fn gauss_gauss(c: f64, m: u32, a: f64, b: f64, center: f64, v: f64, out: &mut Vec<BasisTerm>) {
    let aa = a - 0.5 / v;
    let quad = -1.0 / (4.0 * aa * v * v) - 0.5 / v;
    let lin = -b / (2.0 * aa * v);
    let log_c = -b * b / (4.0 * aa);
    let mu0 = -b / (2.0 * aa);
    let mu1 = -1.0 / (2.0 * aa * v);
    let g = -aa;
    let scale = c / (2.0 * PI * v).sqrt() * log_c.exp();
    // sum_i C(m,i) M_i (mu0 + mu1 x)^{m-i}
    let mut p: Vec<f64> = Vec::new();
    for i in (0..=m).step_by(2) {
        let mi = special::half_gamma_even(i) * g.powf(-(f64::from(i) + 1.0) / 2.0);
        let mut lin_pow = vec![1.0];
        for _ in 0..(m - i) {
            lin_pow = poly::mul(&lin_pow, &[mu0, mu1]);
        }
        poly::add_into(&mut p, &lin_pow, poly::binom(m, i) * mi);
    }
    for (j, &pc) in p.iter().enumerate() {
        if pc == 0.0 {
            continue;
        }
        out.push(BasisTerm::Gauss {
            coeff: scale * pc,
            power: j as u32,
            quad,
            lin,
            center,
        });
    }
}

/// `(k/2) e^{-k|.|} * c u^m sign^ε e^{-k|u|}`. For `x > 0` the result is
/// `(k/2) e^{-kx} [(-1)^{m+ε} m!/(2k)^{m+1} + x^{m+1}/(m+1)
///  + sum_i m!/(m-i)! x^{m-i}/(2k)^{i+1}]`, extended by parity `(-1)^{m+ε}`.
fn laplace_same_decay(c: f64, m: u32, sign: bool, k: f64, center: f64, out: &mut Vec<BasisTerm>) {
    let eps = u32::from(sign);
    let parity = (m + eps) % 2;
    let mut p = vec![0.0; m as usize + 2];
    let two_k = 2.0 * k;
    let mf = special::factorial(m);
    p[0] += if parity == 0 { 1.0 } else { -1.0 } * mf / two_k.powi(m as i32 + 1);
    p[m as usize + 1] += 1.0 / (f64::from(m) + 1.0);
    let mut falling = 1.0;
    for i in 0..=m {
        p[(m - i) as usize] += falling / two_k.powi(i as i32 + 1);
        falling *= f64::from(m - i);
    }
    for (j, &pc) in p.iter().enumerate() {
        if pc == 0.0 {
            continue;
        }
        out.push(BasisTerm::ExpAbs {
            coeff: 0.5 * k * c * pc,
            power: j as u32,
            sign: (parity + j as u32) % 2 == 1,
            decay: k,
            center,
        });
    }
}
