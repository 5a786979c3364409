//! Feature selection for sparse linear regression with a diverging number of
//! relevant features, using the extended Bayes information criterion (EBIC).
//!
//! The crate is organized bottom-up:
//!
//! * [`simgen`] generates structured synthetic regression data.
//! * [`linmodel`] fits least squares on a support and reports diagnostics.
//! * [`ebic`] scores submodels and checks the criterion's asymptotics.
//! * [`solvers`] computes LASSO and SCAD solution paths.
//! * [`pipeline`] chains screening, the SCAD path and EBIC tuning.
//! * [`experiment`] runs the Monte Carlo study.

pub mod ebic;
pub mod error;
pub mod experiment;
pub mod linmodel;
pub mod pipeline;
pub mod simgen;
pub mod solvers;
pub mod special;
mod support;

pub use ebic::{ebic_score, gamma_sc, gamma_threshold, log_binomial, GammaPolicy};
pub use error::{Error, Result};
pub use experiment::{RandomStream, SettingSummary, StudyConfig};
pub use linmodel::{ols_fit, FittedModel};
pub use pipeline::{pdr_fdr, run_two_stage, PipelineConfig, SelectionResult};
pub use simgen::{CovarianceKind, CovarianceSpec, Dataset};
pub use solvers::{PenaltySpec, PathResult};
pub use support::SupportSet;
