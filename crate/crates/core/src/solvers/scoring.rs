use nalgebra::DVector;

use super::{detect_separation, FitConfig, FitResult, Method, SeparationKind};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BinomialDataset, ModelState};
use crate::penalties;

/// Coefficient or linear-predictor magnitude past which an unconverged
/// likelihood fit is treated as diverging.
pub const DIVERGENCE_LIMIT: f64 = 30.0;

/// A "converged" likelihood fit with a linear predictor this large is checked
/// for separation before being reported as converged.
const SATURATION_ETA: f64 = 15.0;

/// Trajectory of a Fisher-scoring run.
#[derive(Debug, Clone)]
pub struct ScoringRun {
    pub beta: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `score_scale * max|score|` at `beta`.
    pub grad_norm: f64,
    /// Stopped by the divergence guard rather than by convergence or the cap.
    pub diverged: bool,
    /// Log-likelihood after each accepted step, starting point first.
    pub objective_trace: Vec<f64>,
}

/// Fisher scoring `beta <- beta + (X'WX)^{-1} X'(y - m pi)` with step-halving
/// on log-likelihood decrease.
///
/// `score_scale` multiplies the score before the convergence test; a
/// penalized objective that is a multiple of this likelihood converges on
/// its own gradient that way. With `guard` set, the run stops once
/// `|beta|` or `|eta|` exceeds [`DIVERGENCE_LIMIT`].
pub fn fisher_scoring(
    data: &BinomialDataset,
    config: &FitConfig,
    score_scale: f64,
    guard: bool,
) -> Result<ScoringRun> {
    let mut beta = config.validate(data.p())?;
    let mut state = ModelState::new(&beta, data)?;
    let mut objective = state.log_likelihood(data);
    let mut trace = vec![objective];
    let mut iterations = 0;
    let mut converged = false;
    let mut diverged = false;
    let mut grad_norm;

    loop {
        let score = state.score(data);
        grad_norm = score_scale * score.amax();
        if grad_norm < config.grad_tol {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }
        if guard && (beta.amax() > DIVERGENCE_LIMIT || state.eta.amax() > DIVERGENCE_LIMIT) {
            diverged = true;
            break;
        }
        let chol = match linalg::cholesky(state.fisher_information(data)) {
            Ok(c) => c,
            Err(e) if iterations == 0 || !guard => return Err(e),
            Err(_) => {
                diverged = true;
                break;
            }
        };
        let step = chol.solve(&score);

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=config.step_halving_max {
            let candidate = &beta + &step * scale;
            let cand_state = ModelState::new(&candidate, data)?;
            let cand_obj = cand_state.log_likelihood(data);
            if cand_obj >= objective - 1e-12 * (1.0 + objective.abs()) {
                accepted = Some((candidate, cand_state, cand_obj));
                break;
            }
            scale *= 0.5;
        }
        let Some((candidate, cand_state, cand_obj)) = accepted else {
            break;
        };
        beta = candidate;
        state = cand_state;
        objective = cand_obj;
        trace.push(objective);
        iterations += 1;
    }

    Ok(ScoringRun {
        beta,
        iterations,
        converged,
        grad_norm,
        diverged,
        objective_trace: trace,
    })
}

/// Maximum likelihood by Fisher scoring.
///
/// When the iteration fails to converge, or converges to fitted probabilities
/// saturated at 0 or 1, the data are checked for separation and the
/// diagnosis is attached to the result; separated data are reported with
/// `converged = false`.
pub fn fit_mle(data: &BinomialDataset, config: &FitConfig) -> Result<FitResult> {
    let run = fisher_scoring(data, config, 1.0, true)?;
    let mut converged = run.converged;
    let mut separation = None;
    let saturated = ModelState::new(&run.beta, data)?.eta.amax() > SATURATION_ETA;
    if !converged || saturated {
        let diagnosis = detect_separation(data);
        if diagnosis.kind != SeparationKind::None {
            converged = false;
        }
        if !converged {
            separation = Some(diagnosis);
        }
    }
    let mut fit = FitResult::assemble(
        Method::Mle,
        run.beta,
        data,
        converged,
        run.iterations,
        run.grad_norm,
    )?;
    fit.separation = separation;
    Ok(fit)
}

/// Penalized maximum likelihood under the default Diaconis-Ylvisaker prior,
/// computed as the ordinary MLE of the pseudo-counts.
///
/// The penalized log-likelihood is `(1 + p/m)` times the pseudo-count
/// log-likelihood, so convergence is tested on the scaled pseudo-count score;
/// `final_grad_norm` is the penalized score evaluated directly on the
/// original data.
pub fn fit_dy(data: &BinomialDataset, config: &FitConfig) -> Result<FitResult> {
    let pseudo = penalties::pseudo_counts_default(data)?;
    let scale = 1.0 + data.p() as f64 / data.total_trials();
    let run = fisher_scoring(&pseudo, config, scale, false)?;
    let grad = penalties::penalized_score_dy(&run.beta, data)?.amax();
    if !grad.is_finite() {
        return Err(Error::NonFinite("penalized score"));
    }
    FitResult::assemble(
        Method::Dy,
        run.beta,
        data,
        run.converged,
        run.iterations,
        grad,
    )
}
