//! Estimators for binomial logistic regression.
//!
//! Every estimator is a Fisher-scoring iteration on some objective:
//!
//! | method | objective |
//! |---|---|
//! | [`fit_mle`] | log-likelihood |
//! | [`fit_dy`] | log-likelihood of the default DY pseudo-counts |
//! | [`fit_firth`] | Jeffreys-adjusted score (quasi Fisher scoring) |
//! | [`fit_clogg`] | log-likelihood of Clogg-adjusted counts |
//! | [`fit_cordeiro_mccullagh`] | MLE deflated by `1 - p/m` |
//!
//! Convergence is declared when the max-norm of the relevant (penalized)
//! score drops below [`FitConfig::grad_tol`]. Covariances are always the
//! inverse of `X'W(beta)X` on the original data at the reported estimate.

mod corrections;
mod firth;
mod scoring;
mod separation;
pub mod simplex;
mod wald;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BinomialDataset, ModelState};

pub use corrections::{fit_clogg, fit_cordeiro_mccullagh};
pub use firth::{firth_score, fit_firth};
pub use scoring::{fisher_scoring, fit_dy, fit_mle, ScoringRun, DIVERGENCE_LIMIT};
pub use separation::{detect_separation, SeparationDiagnosis, SeparationKind};
pub use wald::wald_interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mle,
    Dy,
    Firth,
    Clogg,
    CordeiroMccullagh,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Mle,
        Method::Dy,
        Method::Firth,
        Method::Clogg,
        Method::CordeiroMccullagh,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Dy => "dy",
            Method::Firth => "firth",
            Method::Clogg => "clogg",
            Method::CordeiroMccullagh => "cordeiro_mccullagh",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "mle" | "ml" => Ok(Method::Mle),
            "dy" | "diaconis_ylvisaker" => Ok(Method::Dy),
            "firth" => Ok(Method::Firth),
            "clogg" => Ok(Method::Clogg),
            "cm" | "cordeiro_mccullagh" => Ok(Method::CordeiroMccullagh),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Max-norm threshold on the (penalized) score.
    pub grad_tol: f64,
    pub step_halving_max: usize,
    /// Starting coefficients; zero when `None`.
    pub start: Option<DVector<f64>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 1e-8,
            step_halving_max: 20,
            start: None,
        }
    }
}

impl FitConfig {
    pub(crate) fn validate(&self, p: usize) -> Result<DVector<f64>> {
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        if !(self.grad_tol > 0.0) || !self.grad_tol.is_finite() {
            return Err(Error::InvalidConfig("grad_tol must be positive".into()));
        }
        match &self.start {
            None => Ok(DVector::zeros(p)),
            Some(s) => {
                crate::error::check_len("start", p, s.len())?;
                if s.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("start"));
                }
                Ok(s.clone())
            }
        }
    }
}

/// Outcome of a fit. Matrices are stored row-major as nested vectors so the
/// record serializes to plain JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: Method,
    pub beta: Vec<f64>,
    /// `None` when the information matrix is singular at `beta`, which only
    /// happens for a diverging maximum likelihood fit.
    pub std_errors: Option<Vec<f64>>,
    pub vcov: Option<Vec<Vec<f64>>>,
    pub converged: bool,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub separation: Option<SeparationDiagnosis>,
    #[serde(default)]
    pub column_names: Option<Vec<String>>,
}

impl FitResult {
    pub fn beta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta)
    }

    pub(crate) fn assemble(
        method: Method,
        beta: DVector<f64>,
        data: &BinomialDataset,
        converged: bool,
        iterations: usize,
        final_grad_norm: f64,
    ) -> Result<Self> {
        let vcov = match covariance(&beta, data) {
            Ok(v) => Some(v),
            Err(Error::RankDeficient) if !converged => None,
            Err(e) => return Err(e),
        };
        let std_errors = vcov
            .as_ref()
            .map(|v| v.diagonal().iter().map(|d| d.sqrt()).collect());
        Ok(Self {
            method,
            beta: beta.iter().copied().collect(),
            std_errors,
            vcov: vcov.map(|v| v.row_iter().map(|r| r.iter().copied().collect()).collect()),
            converged,
            iterations,
            final_grad_norm,
            separation: None,
            column_names: data.column_names().map(<[String]>::to_vec),
        })
    }
}

/// Inverse of `X'W(beta)X`.
pub fn covariance(beta: &DVector<f64>, data: &BinomialDataset) -> Result<DMatrix<f64>> {
    let state = ModelState::new(beta, data)?;
    let chol = linalg::cholesky(state.fisher_information(data))?;
    let mut inv = chol.inverse();
    linalg::symmetrize(&mut inv);
    Ok(inv)
}

pub fn fit(method: Method, data: &BinomialDataset, config: &FitConfig) -> Result<FitResult> {
    match method {
        Method::Mle => fit_mle(data, config),
        Method::Dy => fit_dy(data, config),
        Method::Firth => fit_firth(data, config),
        Method::Clogg => fit_clogg(data, config),
        Method::CordeiroMccullagh => fit_cordeiro_mccullagh(data, config),
    }
}
