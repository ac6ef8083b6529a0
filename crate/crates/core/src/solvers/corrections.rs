use super::scoring::fisher_scoring;
use super::{fit_mle, FitConfig, FitResult, Method, SeparationKind};
use crate::error::{Error, Result};
use crate::model::BinomialDataset;
use crate::penalties::clogg_adjust;

/// MLE on Clogg-adjusted counts. Fractional trial counts go through the same
/// weighted scoring path as integer ones.
pub fn fit_clogg(data: &BinomialDataset, config: &FitConfig) -> Result<FitResult> {
    let successes = data.total_successes();
    if successes <= 0.0 {
        return Err(Error::DegenerateShrinkage("failures"));
    }
    if successes >= data.total_trials() {
        return Err(Error::DegenerateShrinkage("successes"));
    }
    let adjusted = clogg_adjust(data)?;
    let run = fisher_scoring(&adjusted, config, 1.0, false)?;
    FitResult::assemble(
        Method::Clogg,
        run.beta,
        data,
        run.converged,
        run.iterations,
        run.grad_norm,
    )
}

/// `(1 - p/m)` times a finite MLE. Fails when the MLE does not exist.
pub fn fit_cordeiro_mccullagh(data: &BinomialDataset, config: &FitConfig) -> Result<FitResult> {
    let mle = fit_mle(data, config)?;
    if !mle.converged {
        return Err(match mle.separation {
            Some(diag) if diag.kind != SeparationKind::None => Error::Separation(diag),
            _ => Error::NotConverged {
                iterations: mle.iterations,
                grad_norm: mle.final_grad_norm,
            },
        });
    }
    let factor = 1.0 - data.p() as f64 / data.total_trials();
    FitResult::assemble(
        Method::CordeiroMccullagh,
        mle.beta_vector() * factor,
        data,
        true,
        mle.iterations,
        mle.final_grad_norm,
    )
}
