//! Fundamental solution and density evolution for the Kolmogorov–Feller
//! master equation of an Ornstein–Uhlenbeck process driven by Brownian
//! noise and compound Poisson jumps with a Laplace kernel
//! `p(z) = (k/2) e^{-k|z|}`:
//!
//! ```text
//! dX = (B - beta X) dt + sigma dW + dJ,   J compound Poisson, rate lambda
//! ```
//!
//! The crate offers three independent routes to the transition density:
//!
//! * [`kernel`]: closed forms built in a small term algebra ([`term`]),
//!   exact when `alpha = lambda / (2 beta)` is a positive integer and a
//!   convergent binomial series otherwise;
//! * [`spectral`]: numerical inversion of the exact characteristic function;
//! * [`mc`]: exact event-driven simulation of the SDE.
//!
//! [`density`] propagates initial densities with the kernel, and
//! [`validation`] cross-checks all routes against each other.

// `!(x > 0.0)` is how NaN gets rejected along with the bad values;
// float equality guards read better than float literal patterns.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::redundant_guards)]

pub mod density;
pub mod error;
pub mod figures;
pub mod grid;
pub mod kernel;
pub mod mc;
pub mod model;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod term;
pub mod validation;

pub use error::{Error, Result};
pub use model::{ModelParams, Resonance, TimeCoeffs};
pub use term::{BasisTerm, Expr};

/// Version string embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
