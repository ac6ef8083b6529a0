//! Bias-reduced logistic regression.
//!
//! The central estimator, [`solvers::fit_dy`], maximizes the binomial
//! likelihood penalized by a Diaconis-Ylvisaker conjugate prior with mode 0
//! and precision `p/m`. That penalized likelihood equals a rescaled ordinary
//! likelihood on pseudo-counts, so it is fitted with plain Fisher scoring and
//! its estimate exists for every full-rank design, separated or not.
//!
//! Alongside it the crate provides maximum likelihood, Firth's adjusted
//! score, the Clogg et al. and Cordeiro-McCullagh corrections, Wald
//! intervals, an LP-based separation detector, prior density grids and a
//! Monte Carlo harness for comparing the estimators.

pub mod error;
pub mod linalg;
pub mod math;
pub mod model;
pub mod penalties;
pub mod simulation;
pub mod solvers;

pub use error::{Error, Result};
pub use model::BinomialDataset;
pub use solvers::{fit, FitConfig, FitResult, Method, SeparationDiagnosis, SeparationKind};
