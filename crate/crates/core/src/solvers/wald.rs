use super::FitResult;
use crate::error::{Error, Result};
use crate::math::normal_quantile;

/// Per-coefficient Wald intervals `beta_r +/- z se_r` at confidence `level`.
pub fn wald_interval(fit: &FitResult, level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let not_converged = || Error::NotConverged {
        iterations: fit.iterations,
        grad_norm: fit.final_grad_norm,
    };
    if !fit.converged {
        return Err(not_converged());
    }
    let se = fit.std_errors.as_ref().ok_or_else(not_converged)?;
    let z = normal_quantile(0.5 * (1.0 + level));
    Ok(fit
        .beta
        .iter()
        .zip(se)
        .map(|(&b, &s)| (b - z * s, b + z * s))
        .collect())
}
