use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{FitConfig, FitResult, Method};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BinomialDataset, ModelState};

/// Jeffreys-adjusted score `sum (y_i - m_i pi_i) x_ir - sum h_i (pi_i - 1/2) x_ir`.
pub fn firth_score(beta: &DVector<f64>, data: &BinomialDataset) -> Result<DVector<f64>> {
    let state = ModelState::new(beta, data)?;
    Ok(Iterate::at(state, data)?.score)
}

/// Scoring steps whose score norm shrinks by less than this factor count as
/// stalled; the next iteration then tries a full Newton step.
const STALL_RATIO: f64 = 0.5;

struct Iterate {
    state: ModelState,
    chol: Cholesky<f64, Dyn>,
    h: DVector<f64>,
    score: DVector<f64>,
    norm: f64,
    /// Penalized log-likelihood `l(beta) + log|X'WX| / 2`, whose gradient is the score.
    objective: f64,
}

impl Iterate {
    fn at(state: ModelState, data: &BinomialDataset) -> Result<Self> {
        let (h, chol) = state.leverages_and_information(data)?;
        let mut resid = DVector::zeros(data.n());
        for i in 0..data.n() {
            let pi = state.pi[i];
            resid[i] = data.y()[i] - data.m()[i] * pi - h[i] * (pi - 0.5);
        }
        let score = data.x().tr_mul(&resid);
        let norm = score.norm();
        let objective = state.log_likelihood(data) + 0.5 * linalg::log_det(&chol);
        Ok(Self {
            state,
            chol,
            h,
            score,
            norm,
            objective,
        })
    }

    /// A step is accepted when it raises the penalized log-likelihood, or
    /// leaves it unchanged up to rounding while shrinking the score.
    fn improves_on(&self, current: &Iterate) -> bool {
        let slack = 1e-12 * (1.0 + current.objective.abs());
        self.objective > current.objective + slack
            || (self.objective >= current.objective - slack && self.norm <= current.norm)
    }

    fn scoring_direction(&self) -> DVector<f64> {
        self.chol.solve(&self.score)
    }

    /// Modified Newton direction `(-J + t X'WX)^{-1} U*` with the smallest
    /// `t` in a geometric ladder that makes the matrix positive definite.
    fn newton_direction(&self, data: &BinomialDataset) -> Option<DVector<f64>> {
        let neg_j = negative_score_jacobian(self, data).ok()?;
        let info = self.state.fisher_information(data);
        let shifts = std::iter::once(0.0).chain((0..8).map(|k| 0.25 * 4f64.powi(k)));
        shifts
            .filter_map(|t| linalg::cholesky(&neg_j + &info * t).ok())
            .map(|chol| chol.solve(&self.score))
            .next()
    }

    /// Halves `direction` until the step is accepted.
    fn step(&self, direction: &DVector<f64>, data: &BinomialDataset, max_halvings: usize) -> Option<Iterate> {
        let mut scale = 1.0;
        for _ in 0..=max_halvings {
            let candidate = &self.state.beta + direction * scale;
            // a singular information at the candidate counts as a rejected step
            if let Ok(next) = ModelState::new(&candidate, data).and_then(|s| Iterate::at(s, data)) {
                if next.improves_on(self) {
                    return Some(next);
                }
            }
            scale *= 0.5;
        }
        None
    }
}

/// `-dU*/dbeta = X' diag(W + h (1/4 - 3 a^2)) X + 2 X' diag(a) (H o H) diag(a) X`
/// with `a = pi - 1/2` and `H` the weighted hat matrix.
fn negative_score_jacobian(it: &Iterate, data: &BinomialDataset) -> Result<DMatrix<f64>> {
    let xw = linalg::scale_rows(data.x(), &it.state.weights.map(f64::sqrt));
    let z = it
        .chol
        .l_dirty()
        .solve_lower_triangular(&xw.transpose())
        .ok_or(Error::RankDeficient)?;
    let a = it.state.pi.map(|p| p - 0.5);
    let hat_sq = z.tr_mul(&z).map(|v| v * v);
    let ax = linalg::scale_rows(data.x(), &a);
    let diag = DVector::from_fn(data.n(), |i, _| {
        it.state.weights[i] + it.h[i] * (0.25 - 3.0 * a[i] * a[i])
    });
    let mut out = linalg::scale_rows(data.x(), &diag).tr_mul(data.x()) + 2.0 * ax.tr_mul(&(hat_sq * &ax));
    linalg::symmetrize(&mut out);
    Ok(out)
}

/// Firth's bias-reduced estimate by quasi Fisher scoring,
/// `beta <- beta + (X'WX)^{-1} U*(beta)`, with leverages recomputed at every
/// iterate. The step is an ascent direction for the penalized log-likelihood,
/// so it is halved until that objective does not decrease. When scoring
/// stalls, which happens with leverages close to one, a Newton step on the
/// exact Jacobian of `U*` is tried first.
pub fn fit_firth(data: &BinomialDataset, config: &FitConfig) -> Result<FitResult> {
    let beta0 = config.validate(data.p())?;
    let mut current = Iterate::at(ModelState::new(&beta0, data)?, data)?;
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = false;

    loop {
        if current.score.amax() < config.grad_tol {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }
        let halvings = config.step_halving_max;
        let newton = if stalled { current.newton_direction(data) } else { None };
        let next = newton
            .and_then(|d| current.step(&d, data, halvings))
            .or_else(|| current.step(&current.scoring_direction(), data, halvings));
        match next {
            Some(next) => {
                stalled = next.norm > STALL_RATIO * current.norm;
                current = next;
            }
            None => break,
        }
        iterations += 1;
    }

    let grad = current.score.amax();
    FitResult::assemble(
        Method::Firth,
        current.state.beta,
        data,
        converged,
        iterations,
        grad,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::logit;

    #[test]
    fn haldane_correction_for_single_proportion() {
        let d = BinomialDataset::from_rows(&[vec![1.0]], &[0.0], &[10.0]).unwrap();
        let fit = fit_firth(&d, &FitConfig::default()).unwrap();
        assert!(fit.converged);
        // |U| < 1e-8 with dU/dbeta = 11 pi (1 - pi) ~ 0.48 pins beta to ~2e-8
        assert!((fit.beta[0] - logit(0.5 / 11.0)).abs() < 1e-7);
        assert!((fit.beta[0] + 3.0445).abs() < 1e-4);
    }

    #[test]
    fn finite_under_complete_separation() {
        let d = BinomialDataset::from_rows(
            &[vec![1.0, -2.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![1.0, 2.0]],
            &[0.0, 0.0, 1.0, 1.0],
            &[1.0; 4],
        )
        .unwrap();
        let fit = fit_firth(&d, &FitConfig::default()).unwrap();
        assert!(fit.converged);
        let u = firth_score(&fit.beta_vector(), &d).unwrap();
        assert!(u.amax() < 1e-8);
        assert!(fit.beta[1] > 0.0 && fit.beta[1] < 10.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let d = BinomialDataset::from_rows(
            &[vec![1.0, 0.3, -1.2], vec![1.0, -0.8, 0.4], vec![1.0, 1.5, 0.9], vec![1.0, -0.2, -0.7], vec![1.0, 0.9, 2.0]],
            &[1.0, 0.0, 3.0, 2.0, 1.0],
            &[2.0, 1.0, 4.0, 3.0, 2.0],
        )
        .unwrap();
        let beta = DVector::from_vec(vec![0.4, -0.7, 1.1]);
        let it = Iterate::at(ModelState::new(&beta, &d).unwrap(), &d).unwrap();
        let neg_j = negative_score_jacobian(&it, &d).unwrap();
        let eps = 1e-6;
        for s in 0..3 {
            let mut up = beta.clone();
            let mut down = beta.clone();
            up[s] += eps;
            down[s] -= eps;
            let col = (firth_score(&up, &d).unwrap() - firth_score(&down, &d).unwrap()) / (2.0 * eps);
            for r in 0..3 {
                assert!((neg_j[(r, s)] + col[r]).abs() < 1e-7 * (1.0 + col[r].abs()), "({r},{s})");
            }
        }
    }

    #[test]
    fn converges_with_leverages_near_one() {
        let d = BinomialDataset::from_rows(
            &[
                vec![1.0, 0.0, -1.0035526024092138],
                vec![1.0, -0.4107829757887986, -1.2861651012316453],
                vec![1.0, 0.0, -1.254707570430803],
                vec![1.0, 0.0, 1.9482438366518604],
            ],
            &[0.0; 4],
            &[1.0, 3.0, 1.0, 1.0],
        )
        .unwrap();
        let fit = fit_firth(&d, &FitConfig::default()).unwrap();
        assert!(fit.converged, "{} iterations", fit.iterations);
        assert!(firth_score(&fit.beta_vector(), &d).unwrap().amax() < 1e-8);
    }
}
