//! Process parameters and the time-dependent coefficients shared by every
//! solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants of `dX = (B - beta X) dt + sigma dW + dJ` with jump rate
/// `lambda` and Laplace jump density `(k/2) e^{-k|z|}`.
///
/// Construct through [`ModelParams::new`]; every other module assumes the
/// invariants checked there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    b: f64,
    beta: f64,
    sigma: f64,
    lambda: f64,
    k: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    #[serde(rename = "B")]
    b: f64,
    beta: f64,
    sigma: f64,
    lambda: f64,
    k: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.b, r.beta, r.sigma, r.lambda, r.k)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            b: p.b,
            beta: p.beta,
            sigma: p.sigma,
            lambda: p.lambda,
            k: p.k,
        }
    }
}

/// Relative tolerance for recognising an integer `alpha`.
pub const RESONANCE_TOL: f64 = 1e-12;

impl ModelParams {
    pub fn new(b: f64, beta: f64, sigma: f64, lambda: f64, k: f64) -> Result<Self> {
        let all = [b, beta, sigma, lambda, k];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "all parameters must be finite (B={b}, beta={beta}, sigma={sigma}, lambda={lambda}, k={k})"
            )));
        }
        if beta <= 0.0 {
            return Err(Error::InvalidParams(format!("beta must be > 0, got {beta}")));
        }
        if k <= 0.0 {
            return Err(Error::InvalidParams(format!("k must be > 0, got {k}")));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidParams(format!("sigma must be >= 0, got {sigma}")));
        }
        if lambda < 0.0 {
            return Err(Error::InvalidParams(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            b,
            beta,
            sigma,
            lambda,
            k,
        })
    }

    /// Parameters with the resonance `lambda = 2 n beta`.
    pub fn resonant(b: f64, beta: f64, sigma: f64, n: u32, k: f64) -> Result<Self> {
        Self::new(b, beta, sigma, 2.0 * f64::from(n) * beta, k)
    }

    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.b, self.beta, sigma, self.lambda, self.k)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.b, self.beta, self.sigma, lambda, self.k)
    }

    /// `alpha = lambda / (2 beta)`.
    pub fn alpha(&self) -> f64 {
        self.lambda / (2.0 * self.beta)
    }

    pub fn resonance(&self) -> Resonance {
        Resonance::classify(self.alpha())
    }

    pub fn time_coeffs(&self, t: f64) -> Result<TimeCoeffs> {
        check_time(t)?;
        // 1 - e^{-beta t} and 1 - e^{-2 beta t} without cancellation at small t
        let one_minus_e1 = -(-self.beta * t).exp_m1();
        let one_minus_e2 = -(-2.0 * self.beta * t).exp_m1();
        Ok(TimeCoeffs {
            t,
            a1: -(self.b / self.beta) * one_minus_e1,
            a2: -(self.sigma * self.sigma / (4.0 * self.beta)) * one_minus_e2,
        })
    }

    /// `x - y e^{-beta t} + A1(t)`: the frame in which the kernel has a
    /// fixed shape.
    pub fn shifted_coord(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        Ok(x - self.singular_location(t, y)?)
    }

    /// Weight of the delta component, `e^{-2 alpha beta t} = e^{-lambda t}`
    /// (the probability of no jump on `[0, t]`).
    pub fn singular_amplitude(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok((-self.lambda * t).exp())
    }

    /// Position of the deterministic flow started at `y`:
    /// `y e^{-beta t} + (B/beta)(1 - e^{-beta t})`.
    pub fn singular_location(&self, t: f64, y: f64) -> Result<f64> {
        check_time(t)?;
        let decay = (-self.beta * t).exp();
        let one_minus = -(-self.beta * t).exp_m1();
        Ok(y * decay + (self.b / self.beta) * one_minus)
    }

    /// Variance of the full transition law at time `t`.
    pub fn transition_variance(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let one_minus_e2 = -(-2.0 * self.beta * t).exp_m1();
        Ok(self.sigma * self.sigma * one_minus_e2 / (2.0 * self.beta)
            + 2.0 * self.alpha() * one_minus_e2 / (self.k * self.k))
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

/// `A1`, `A2` at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCoeffs {
    pub t: f64,
    /// Drift shift `-(B/beta)(1 - e^{-beta t})`.
    pub a1: f64,
    /// Gaussian exponent coefficient `-(sigma^2/(4 beta))(1 - e^{-2 beta t})`.
    pub a2: f64,
}

impl TimeCoeffs {
    /// Variance of the Gaussian whose transform is `e^{A2 w^2}`.
    pub fn gaussian_variance(&self) -> f64 {
        -2.0 * self.a2
    }
}

/// Whether `alpha` hits the resonance that makes the kernel a finite sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Resonance {
    Zero,
    Integer { n: u32 },
    General { alpha: f64 },
}

impl Resonance {
    pub fn classify(alpha: f64) -> Self {
        if alpha == 0.0 {
            return Resonance::Zero;
        }
        let r = alpha.round();
        if r >= 1.0 && r <= f64::from(u32::MAX) && (alpha - r).abs() <= RESONANCE_TOL * alpha.max(1.0) {
            Resonance::Integer { n: r as u32 }
        } else {
            Resonance::General { alpha }
        }
    }

    pub fn integer(&self) -> Option<u32> {
        match *self {
            Resonance::Zero => Some(0),
            Resonance::Integer { n } => Some(n),
            Resonance::General { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(b: f64, beta: f64, sigma: f64, lambda: f64, k: f64) -> ModelParams {
        ModelParams::new(b, beta, sigma, lambda, k).unwrap()
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(p(0.0, 1.0, 0.0, 2.0, 1.0).alpha(), 1.0);
        assert_eq!(p(0.0, 3.0, 0.0, 0.0, 1.0).alpha(), 0.0);
        assert_eq!(p(0.0, 1.0, 0.0, 3.0, 1.0).alpha(), 1.5);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ModelParams::new(0.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, -0.1, 1.0, 1.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, 0.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn time_coeff_examples() {
        let c = p(0.0, 2.0, 1.0, 1.0, 1.0).time_coeffs(0.7).unwrap();
        assert_eq!(c.a1, 0.0);
        let c = p(1.0, 2.0, 0.0, 1.0, 1.0).time_coeffs(0.7).unwrap();
        assert_eq!(c.a2, 0.0);
        let c = p(1.0, 1.0, 2.0, 1.0, 1.0).time_coeffs(60.0).unwrap();
        assert_relative_eq!(c.a1, -1.0, epsilon = 1e-15);
        assert_relative_eq!(c.a2, -1.0, epsilon = 1e-15);
        let c = p(1.0, 1.0, 2.0, 1.0, 1.0).time_coeffs(0.0).unwrap();
        assert_eq!((c.a1, c.a2), (0.0, 0.0));
        assert!(p(1.0, 1.0, 2.0, 1.0, 1.0).time_coeffs(-1.0).is_err());
    }

    #[test]
    fn shifted_coord_examples() {
        let m = p(0.3, 1.3, 0.0, 1.0, 1.0);
        assert_eq!(m.shifted_coord(0.0, 2.0, 0.5).unwrap(), 1.5);
        let m0 = p(0.0, 1.0, 0.0, 1.0, 1.0);
        assert!(m0.shifted_coord(800.0, 2.0, 5.0).unwrap() - 2.0 < 1e-300);
        let m1 = p(1.0, 1.0, 0.0, 1.0, 1.0);
        assert_relative_eq!(m1.shifted_coord(2f64.ln(), 0.0, 0.0).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn singular_amplitude_examples() {
        let m = p(0.0, 1.0, 0.0, 2.0, 1.0);
        assert_eq!(m.singular_amplitude(0.0).unwrap(), 1.0);
        assert_relative_eq!(m.singular_amplitude(0.5).unwrap(), (-1.0f64).exp(), epsilon = 1e-16);
        assert_relative_eq!(m.singular_amplitude(0.5).unwrap(), 0.367879, epsilon = 1e-6);
        let m = p(0.0, 1.0, 0.0, 0.0, 1.0);
        assert_eq!(m.singular_amplitude(123.0).unwrap(), 1.0);
    }

    #[test]
    fn singular_location_examples() {
        let m = p(2.0, 1.0, 0.0, 2.0, 1.0);
        assert_eq!(m.singular_location(0.0, 3.3).unwrap(), 3.3);
        assert_relative_eq!(m.singular_location(60.0, 0.0).unwrap(), 2.0, epsilon = 1e-15);
        let m = p(0.0, 1.0, 0.0, 2.0, 1.0);
        assert!(m.singular_location(800.0, 5.0).unwrap().abs() < 1e-300);
    }

    #[test]
    fn resonance_classification() {
        assert_eq!(Resonance::classify(0.0), Resonance::Zero);
        assert_eq!(Resonance::classify(3.0), Resonance::Integer { n: 3 });
        assert_eq!(Resonance::classify(3.0 + 1e-13), Resonance::Integer { n: 3 });
        assert!(matches!(Resonance::classify(3.0 + 1e-9), Resonance::General { .. }));
        assert!(matches!(Resonance::classify(0.5), Resonance::General { .. }));
        assert_eq!(
            ModelParams::resonant(0.0, 0.7, 0.0, 4, 1.0).unwrap().resonance(),
            Resonance::Integer { n: 4 }
        );
    }

    #[test]
    fn params_json_roundtrip_rejects_bad() {
        let m = p(0.5, 1.0, 0.2, 2.0, 1.5);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"B\""));
        assert_eq!(serde_json::from_str::<ModelParams>(&s).unwrap(), m);
        assert!(serde_json::from_str::<ModelParams>(r#"{"B":0,"beta":-1,"sigma":0,"lambda":1,"k":1}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn amplitude_is_zero_jump_probability(beta in 0.1f64..5.0, lambda in 0.0f64..10.0, t in 0.0f64..10.0) {
                let m = ModelParams::new(0.0, beta, 0.0, lambda, 1.0).unwrap();
                let a = m.singular_amplitude(t).unwrap();
                let expected = (-2.0 * m.alpha() * beta * t).exp();
                prop_assert!((a - expected).abs() <= 1e-12 * expected);
            }

            #[test]
            fn singular_location_zeroes_shifted_coord(b in -3.0f64..3.0, beta in 0.1f64..5.0, t in 0.0f64..10.0, y in -5.0f64..5.0) {
                let m = ModelParams::new(b, beta, 0.0, 1.0, 1.0).unwrap();
                let xs = m.singular_location(t, y).unwrap();
                prop_assert_eq!(m.shifted_coord(t, xs, y).unwrap(), 0.0);
            }

            #[test]
            fn a2_monotone_and_bounded(beta in 0.1f64..5.0, sigma in 0.01f64..3.0, t1 in 0.001f64..5.0, dt in 0.0f64..5.0) {
                let m = ModelParams::new(0.0, beta, sigma, 1.0, 1.0).unwrap();
                let a = m.time_coeffs(t1).unwrap().a2;
                let b = m.time_coeffs(t1 + dt).unwrap().a2;
                prop_assert!(b <= a);
                prop_assert!(a < 0.0 && a >= -sigma * sigma / (4.0 * beta));
            }
        }
    }
}
