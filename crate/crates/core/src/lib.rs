//! Extremal quantile regression.
//!
//! The crate is organised bottom-up:
//!
//! - [`qr_core`]: check loss, sample quantiles and the quantile-regression
//!   solver (vertex-exact simplex, interior point for large samples).
//! - [`tail_index`]: Pickands and Hill estimators of the EV index, the scale
//!   vector, the constant `L` and the canonical scaling `A_T`.
//! - [`ev_inference`]: self-normalized and canonically normalized statistics,
//!   extremal bootstrap, extremal subsampling, simulation of the EV limit,
//!   median-bias correction and confidence intervals.
//! - [`extrapolation`]: extrapolation of intermediate quantiles to very
//!   extreme ones through the Pareto tail model.
//! - [`mc_lab`]: simulation designs and Monte Carlo studies.
//!
//! Lower tails are the default throughout. Upper-tail questions are answered
//! by negating the response (see [`qr_core::Dataset::reflect`]).

pub mod error;
pub mod ev_inference;
pub mod extrapolation;
pub mod mc_lab;
pub mod qr_core;
pub mod rng;
pub mod tail_index;

pub(crate) mod series;

pub use error::{Error, Result};

/// Library version, recorded in report metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
