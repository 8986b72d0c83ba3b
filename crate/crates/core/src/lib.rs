//! Generalized autoregressive score (GAS) models.
//!
//! The crate is organised bottom-up:
//!
//! - [`distributions`]: conditional densities with their scores, information
//!   matrices, samplers, moments and distribution functions;
//! - [`links`]: maps between the unconstrained and natural parameter spaces;
//! - [`model`]: specification, the score-driven filter, simulation and
//!   parameter targeting;
//! - [`estimation`]: maximum likelihood with two-stage starting values;
//! - [`forecasting`]: one- and multi-step density forecasts and rolling
//!   backtests;
//! - [`scoring`]: log score, weighted CRPS and Diebold-Mariano comparisons.

pub mod distributions;
pub mod error;
pub mod estimation;
pub mod forecasting;
pub mod links;
pub mod model;
pub mod scoring;
pub mod special;

pub use distributions::{dist_info, DistInfo, Distribution, DistributionId, ParamVector, Role, Scaling};
pub use error::{GasError, Result};
