//! Pseudo-count penalties and prior log-densities.
//!
//! The Diaconis-Ylvisaker (DY) conjugate prior with mode `beta0` and precision
//! `tau` turns the posterior into a binomial likelihood on pseudo-counts
//! `y*_i = (tau kappa_i + y_i) / (tau + 1)`, with `kappa_i = m_i sigmoid(x_i' beta0)`.
//! The default choice `beta0 = 0`, `tau = p / m` gives the bias-reducing
//! penalty fitted by [`crate::solvers::fit_dy`].
//!
//! All densities are unnormalized.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::math::{sigmoid, softplus};
use crate::model::{self, BinomialDataset, ModelState};

/// Conjugate prior hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DYPrior {
    beta0: DVector<f64>,
    tau: f64,
}

impl DYPrior {
    pub fn new(beta0: DVector<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidPrior(format!(
                "precision must be positive and finite, got {tau}"
            )));
        }
        if beta0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prior mode"));
        }
        Ok(Self { beta0, tau })
    }

    /// `beta0 = 0`, `tau = p / m`.
    pub fn default_for(data: &BinomialDataset) -> Self {
        Self {
            beta0: DVector::zeros(data.p()),
            tau: data.p() as f64 / data.total_trials(),
        }
    }

    pub fn beta0(&self) -> &DVector<f64> {
        &self.beta0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Prior guesses `kappa_i = m_i sigmoid(x_i' beta0)`, each in `(0, m_i)`.
    pub fn kappa(&self, data: &BinomialDataset) -> Result<DVector<f64>> {
        check_len("prior mode", data.p(), self.beta0.len())?;
        let eta = data.x() * &self.beta0;
        Ok(eta.zip_map(data.m(), |e, m| m * sigmoid(e)))
    }
}

/// Which prior to evaluate in [`log_prior_density`] and [`prior_grid`].
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    DiaconisYlvisaker(DYPrior),
    /// `0.5 log det X'W(beta)X`
    Jeffreys,
    /// Independent zero-centred Cauchy per coefficient. `None` uses
    /// [`DEFAULT_CAUCHY_SCALE`] for every coordinate.
    Cauchy { scales: Option<Vec<f64>> },
}

pub const DEFAULT_CAUCHY_SCALE: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Dy,
    Jeffreys,
    Cauchy,
}

impl PriorSpec {
    pub fn kind(&self) -> PriorKind {
        match self {
            PriorSpec::DiaconisYlvisaker(_) => PriorKind::Dy,
            PriorSpec::Jeffreys => PriorKind::Jeffreys,
            PriorSpec::Cauchy { .. } => PriorKind::Cauchy,
        }
    }

    /// The default DY prior for `data`.
    pub fn default_dy(data: &BinomialDataset) -> Self {
        PriorSpec::DiaconisYlvisaker(DYPrior::default_for(data))
    }

    pub fn cauchy() -> Self {
        PriorSpec::Cauchy { scales: None }
    }
}

/// Pseudo-counts `p/(p+m) * m_i/2 + m/(p+m) * y_i` of the default DY penalty.
pub fn pseudo_counts_default(data: &BinomialDataset) -> Result<BinomialDataset> {
    let p = data.p() as f64;
    let total = data.total_trials();
    let prior_weight = p / (p + total);
    let data_weight = total / (p + total);
    let y = data
        .y()
        .zip_map(data.m(), |y, m| prior_weight * 0.5 * m + data_weight * y);
    data.with_responses(y)
}

/// Pseudo-counts `kappa_i tau/(tau+1) + y_i/(tau+1)` for a general DY prior.
pub fn pseudo_counts_general(data: &BinomialDataset, prior: &DYPrior) -> Result<BinomialDataset> {
    let kappa = prior.kappa(data)?;
    let tau = prior.tau;
    let y = kappa.zip_map(data.y(), |k, y| k * tau / (tau + 1.0) + y / (tau + 1.0));
    data.with_responses(y)
}

/// Clogg et al. correction: each row gains `p * sum(y) / (n m)` successes and
/// `p / n` trials, shrinking proportions toward the pooled rate.
pub fn clogg_adjust(data: &BinomialDataset) -> Result<BinomialDataset> {
    let n = data.n() as f64;
    let p = data.p() as f64;
    let total = data.total_trials();
    let extra_y = p * data.total_successes() / (n * total);
    let extra_m = p / n;
    data.with_counts(data.y().add_scalar(extra_y), data.m().add_scalar(extra_m))
}

/// Default-DY penalized log-likelihood
/// `l(beta; y) + (p/2m) sum m_i eta_i - (p/m) sum m_i log(1 + exp(eta_i))`.
pub fn penalized_loglik_dy(beta: &DVector<f64>, data: &BinomialDataset) -> Result<f64> {
    let state = ModelState::new(beta, data)?;
    let ratio = data.p() as f64 / data.total_trials();
    let mut linear = 0.0;
    let mut curvature = 0.0;
    for (&e, &m) in state.eta.iter().zip(data.m().iter()) {
        linear += m * e;
        curvature += m * softplus(e);
    }
    Ok(state.log_likelihood(data) + 0.5 * ratio * linear - ratio * curvature)
}

/// Gradient of [`penalized_loglik_dy`]:
/// `sum (y_i - m_i pi_i) x_ir - p sum (m_i/m)(pi_i - 1/2) x_ir`.
pub fn penalized_score_dy(beta: &DVector<f64>, data: &BinomialDataset) -> Result<DVector<f64>> {
    let state = ModelState::new(beta, data)?;
    let p = data.p() as f64;
    let total = data.total_trials();
    let mut resid = DVector::zeros(data.n());
    for i in 0..data.n() {
        let (y, m, pi) = (data.y()[i], data.m()[i], state.pi[i]);
        resid[i] = (y - m * pi) - p * (m / total) * (pi - 0.5);
    }
    Ok(data.x().tr_mul(&resid))
}

/// Unnormalized log prior density at `beta`.
pub fn log_prior_density(
    beta: &DVector<f64>,
    data: &BinomialDataset,
    prior: &PriorSpec,
) -> Result<f64> {
    data.check_beta(beta)?;
    match prior {
        PriorSpec::DiaconisYlvisaker(dy) => {
            let kappa = dy.kappa(data)?;
            let eta = data.x() * beta;
            let mut acc = 0.0;
            for i in 0..data.n() {
                acc += kappa[i] * eta[i] - data.m()[i] * softplus(eta[i]);
            }
            Ok(dy.tau * acc)
        }
        PriorSpec::Jeffreys => {
            let info = model::fisher_information(beta, data)?;
            Ok(0.5 * linalg::log_det(&linalg::cholesky(info)?))
        }
        PriorSpec::Cauchy { scales } => {
            let scales = cauchy_scales(scales.as_deref(), data.p())?;
            Ok(beta
                .iter()
                .zip(&scales)
                .map(|(&b, &s)| cauchy_log_pdf(b, s))
                .sum())
        }
    }
}

fn cauchy_scales(scales: Option<&[f64]>, p: usize) -> Result<Vec<f64>> {
    match scales {
        None => Ok(vec![DEFAULT_CAUCHY_SCALE; p]),
        Some(s) => {
            check_len("cauchy scales", p, s.len())?;
            if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidPrior("cauchy scales must be positive".into()));
            }
            Ok(s.to_vec())
        }
    }
}

fn cauchy_log_pdf(x: f64, scale: f64) -> f64 {
    let z = x / scale;
    -(std::f64::consts::PI * scale).ln() - z.mul_add(z, 1.0).ln()
}

/// Log-density evaluated on a square grid over two coefficients, shifted so
/// that its maximum is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorGrid {
    /// Grid coordinates shared by both axes.
    pub axis: Vec<f64>,
    /// `values[(i, j)]` is the log-density at `(axis[i], axis[j])`.
    pub values: DMatrix<f64>,
}

impl PriorGrid {
    /// `(beta1, beta2, logdensity)` triples in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let k = self.axis.len();
        (0..k).flat_map(move |i| {
            (0..k).map(move |j| (self.axis[i], self.axis[j], self.values[(i, j)]))
        })
    }

    /// Grid index of the maximum.
    pub fn argmax(&self) -> (usize, usize) {
        let k = self.axis.len();
        (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .expect("grid has at least two points per axis")
    }
}

/// Evaluates a prior over `[lo, hi]^2` for a two-coefficient design. The
/// design is used as given; standardizing covariates is up to the caller.
pub fn prior_grid(
    data: &BinomialDataset,
    prior: &PriorSpec,
    range: (f64, f64),
    resolution: usize,
) -> Result<PriorGrid> {
    if data.p() != 2 {
        return Err(Error::DimensionMismatch {
            what: "prior grid coefficients",
            expected: 2,
            found: data.p(),
        });
    }
    let (lo, hi) = range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidConfig(format!("grid range [{lo}, {hi}] is empty")));
    }
    if resolution < 2 {
        return Err(Error::InvalidConfig("grid resolution must be at least 2".into()));
    }
    let step = (hi - lo) / (resolution - 1) as f64;
    let axis: Vec<f64> = (0..resolution).map(|k| lo + step * k as f64).collect();
    let mut values = DMatrix::zeros(resolution, resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            let beta = DVector::from_vec(vec![axis[i], axis[j]]);
            values[(i, j)] = log_prior_density(&beta, data, prior)?;
        }
    }
    let max = values.max();
    values.add_scalar_mut(-max);
    Ok(PriorGrid { axis, values })
}
