//! Monte Carlo comparison of the estimators.
//!
//! Each replication draws its design and responses from a ChaCha stream keyed
//! by `(seed, replication, purpose)`, so a replication's data do not depend on
//! which other replications ran or in what order. Reports aggregate
//! per-replication records in replication order, which makes the sequential
//! and parallel schedules produce identical numbers.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BinomialDataset;
use crate::solvers::{self, wald_interval, FitConfig, Method};

/// Covariate generation policy.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    /// iid `Normal(0, 1/n)` entries, redrawn every replication.
    GaussianScaled,
    /// The same user-supplied n x p matrix in every replication.
    FixedMatrix(DMatrix<f64>),
    /// Rows with variance `1/n` per entry and exchangeable correlation `rho`
    /// between columns, redrawn every replication.
    CorrelatedGaussian { rho: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub p: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub true_beta: Vec<f64>,
    pub design: Design,
    /// Trials per row; length `n`.
    pub trials: Vec<u64>,
    pub methods: Vec<Method>,
    pub fit: FitConfig,
    /// When set, Wald intervals at this level are checked for coverage.
    pub coverage_level: Option<f64>,
}

impl ScenarioConfig {
    /// Binary responses, all five estimators, default fit settings.
    pub fn new(n: usize, p: usize, n_reps: usize, seed: u64, true_beta: Vec<f64>, design: Design) -> Self {
        Self {
            n,
            p,
            n_reps,
            seed,
            true_beta,
            design,
            trials: vec![1; n],
            methods: Method::ALL.to_vec(),
            fit: FitConfig::default(),
            coverage_level: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 || self.p == 0 || self.n_reps == 0 {
            return bad("n, p and n_reps must be positive".into());
        }
        if self.true_beta.len() != self.p {
            return bad(format!(
                "true_beta has {} entries, expected p = {}",
                self.true_beta.len(),
                self.p
            ));
        }
        if self.true_beta.iter().any(|b| !b.is_finite()) {
            return bad("true_beta must be finite".into());
        }
        if self.trials.len() != self.n {
            return bad(format!(
                "trials has {} entries, expected n = {}",
                self.trials.len(),
                self.n
            ));
        }
        if self.trials.iter().any(|&m| m == 0) {
            return bad("trials must be positive".into());
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods contains duplicates".into());
        }
        if let Some(level) = self.coverage_level {
            if !(level > 0.0 && level < 1.0) {
                return bad(format!("coverage_level must lie in (0, 1), got {level}"));
            }
        }
        match &self.design {
            Design::GaussianScaled => {}
            Design::FixedMatrix(x) => {
                if x.shape() != (self.n, self.p) {
                    return bad(format!(
                        "fixed design is {}x{}, expected {}x{}",
                        x.nrows(),
                        x.ncols(),
                        self.n,
                        self.p
                    ));
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return bad("fixed design must be finite".into());
                }
            }
            Design::CorrelatedGaussian { rho } => {
                if !(0.0..1.0).contains(rho) {
                    return bad(format!("rho must lie in [0, 1), got {rho}"));
                }
            }
        }
        Ok(())
    }
}

/// `p/5` copies each of `-3, -1.5, 0, 1.5, 3`, in that order.
pub fn make_highdim_beta(p: usize) -> Result<Vec<f64>> {
    if p == 0 || p % 5 != 0 {
        return Err(Error::InvalidConfig(format!(
            "block coefficients need p divisible by 5, got {p}"
        )));
    }
    let block = p / 5;
    Ok([-3.0, -1.5, 0.0, 1.5, 3.0]
        .iter()
        .flat_map(|&v| std::iter::repeat(v).take(block))
        .collect())
}

const STREAM_DESIGN: u64 = 0;
const STREAM_RESPONSE: u64 = 1;

fn stream(seed: u64, rep_index: usize, purpose: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((rep_index as u64) << 8) | purpose);
    rng
}

fn draw_design(config: &ScenarioConfig, rep_index: usize) -> DMatrix<f64> {
    let (n, p) = (config.n, config.p);
    let sd = (1.0 / n as f64).sqrt();
    match &config.design {
        Design::FixedMatrix(x) => x.clone(),
        Design::GaussianScaled => {
            let mut rng = stream(config.seed, rep_index, STREAM_DESIGN);
            // filled row by row so the stream order does not depend on storage
            let mut x = DMatrix::zeros(n, p);
            for i in 0..n {
                for j in 0..p {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[(i, j)] = sd * z;
                }
            }
            x
        }
        Design::CorrelatedGaussian { rho } => {
            let mut rng = stream(config.seed, rep_index, STREAM_DESIGN);
            let (shared, own) = (rho.sqrt(), (1.0 - rho).sqrt());
            let mut x = DMatrix::zeros(n, p);
            for i in 0..n {
                let common: f64 = StandardNormal.sample(&mut rng);
                for j in 0..p {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[(i, j)] = sd * (shared * common + own * z);
                }
            }
            x
        }
    }
}

/// Draws replication `rep_index`: design per `config.design`, then
/// `y_i ~ Binomial(m_i, sigmoid(x_i' beta))`.
pub fn simulate_dataset(config: &ScenarioConfig, rep_index: usize) -> Result<BinomialDataset> {
    config.validate()?;
    let x = draw_design(config, rep_index);
    let beta = DVector::from_column_slice(&config.true_beta);
    let eta = &x * &beta;
    let mut rng = stream(config.seed, rep_index, STREAM_RESPONSE);
    let mut y = DVector::zeros(config.n);
    for i in 0..config.n {
        let prob = crate::math::sigmoid(eta[i]);
        let dist = Binomial::new(config.trials[i], prob)
            .map_err(|e| Error::InvalidConfig(format!("binomial draw: {e}")))?;
        y[i] = dist.sample(&mut rng) as f64;
    }
    let m = DVector::from_iterator(config.n, config.trials.iter().map(|&t| t as f64));
    BinomialDataset::new(x, y, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// Maximum likelihood (or its deflation) failed because the MLE does not exist.
    Separated,
    NotConverged,
    Error,
}

#[derive(Debug, Clone)]
struct MethodOutcome {
    status: FitStatus,
    estimate: Option<Vec<f64>>,
    covered: Option<Vec<bool>>,
    elapsed_ms: f64,
}

fn run_replication(config: &ScenarioConfig, rep_index: usize) -> Result<Vec<MethodOutcome>> {
    let data = simulate_dataset(config, rep_index)?;
    Ok(config
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let res = solvers::fit(method, &data, &config.fit);
            let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
            let (status, fit) = match res {
                Ok(f) if f.converged && f.beta.iter().all(|b| b.is_finite()) => {
                    (FitStatus::Converged, Some(f))
                }
                Ok(f) if f.separation.as_ref().is_some_and(|s| s.kind != solvers::SeparationKind::None) => {
                    (FitStatus::Separated, None)
                }
                Ok(_) => (FitStatus::NotConverged, None),
                Err(Error::Separation(_)) => (FitStatus::Separated, None),
                Err(Error::NotConverged { .. }) => (FitStatus::NotConverged, None),
                Err(_) => (FitStatus::Error, None),
            };
            let covered = match (&fit, config.coverage_level) {
                (Some(f), Some(level)) => wald_interval(f, level).ok().map(|ci| {
                    ci.iter()
                        .zip(&config.true_beta)
                        .map(|(&(lo, hi), &t)| lo <= t && t <= hi)
                        .collect()
                }),
                _ => None,
            };
            MethodOutcome {
                status,
                estimate: fit.map(|f| f.beta),
                covered,
                elapsed_ms,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub index: usize,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub rmse: f64,
    pub finite_count: usize,
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub coefficients: Vec<CoefficientSummary>,
    /// Replications contributing to the bias and RMSE.
    pub finite_count: usize,
    pub separated: usize,
    pub not_converged: usize,
    pub errors: usize,
    pub mean_time_ms: f64,
    pub median_time_ms: f64,
}

impl MethodSummary {
    pub fn mean_abs_bias(&self, range: std::ops::Range<usize>) -> f64 {
        mean(self.coefficients[range].iter().map(|c| c.bias.abs()))
    }

    pub fn mean_rmse(&self, range: std::ops::Range<usize>) -> f64 {
        mean(self.coefficients[range].iter().map(|c| c.rmse))
    }
}

/// Five-number summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMethodSummary {
    pub method: Method,
    pub mean_abs_bias: f64,
    pub mean_rmse: f64,
    pub bias: Spread,
    pub rmse: Spread,
}

/// A run of consecutive coefficients sharing the same true value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub value: f64,
    pub start: usize,
    pub len: usize,
    pub methods: Vec<BlockMethodSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub n: usize,
    pub p: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub methods: Vec<MethodSummary>,
    /// Replications in which maximum likelihood failed; `None` when it was
    /// not among the methods.
    pub separation_count: Option<usize>,
    /// Present when the true coefficients contain runs of repeated values.
    pub blocks: Vec<BlockSummary>,
}

impl ScenarioReport {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// Long-format CSV `method,coefficient,bias,rmse,finite_count`.
    /// Timings are excluded, so equal configs give byte-identical output.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,coefficient,bias,rmse,finite_count\n");
        for m in &self.methods {
            for c in &m.coefficients {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    m.method, c.index, c.bias, c.rmse, c.finite_count
                ));
            }
        }
        out
    }
}

/// Runs every replication on the current thread.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport> {
    config.validate()?;
    let records = (0..config.n_reps)
        .map(|r| run_replication(config, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(config, &records))
}

/// Runs replications on the rayon pool. Estimates, counts and coverage are
/// identical to [`run_scenario`]; only timings differ.
pub fn run_scenario_parallel(config: &ScenarioConfig) -> Result<ScenarioReport> {
    config.validate()?;
    let records = (0..config.n_reps)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(config, &records))
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn summarize(config: &ScenarioConfig, records: &[Vec<MethodOutcome>]) -> ScenarioReport {
    let methods: Vec<MethodSummary> = config
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let outcomes: Vec<&MethodOutcome> = records.iter().map(|r| &r[k]).collect();
            let used: Vec<&MethodOutcome> = outcomes
                .iter()
                .copied()
                .filter(|o| o.status == FitStatus::Converged)
                .collect();
            let count_status = |s: FitStatus| outcomes.iter().filter(|o| o.status == s).count();

            let coefficients = (0..config.p)
                .map(|j| {
                    let truth = config.true_beta[j];
                    let est: Vec<f64> = used
                        .iter()
                        .map(|o| o.estimate.as_ref().expect("converged fit has an estimate")[j])
                        .collect();
                    let mean_estimate = mean(est.iter().copied());
                    let bias = mean_estimate - truth;
                    let variance = mean(est.iter().map(|e| (e - mean_estimate).powi(2)));
                    let coverage = config.coverage_level.map(|_| {
                        mean(used.iter().map(|o| match &o.covered {
                            Some(c) if c[j] => 1.0,
                            _ => 0.0,
                        }))
                    });
                    CoefficientSummary {
                        index: j,
                        truth,
                        mean_estimate,
                        bias,
                        // sqrt(bias^2 + var) keeps rmse >= |bias| in floating point
                        rmse: (bias * bias + variance).sqrt(),
                        finite_count: est.len(),
                        coverage,
                    }
                })
                .collect();

            let mut times: Vec<f64> = outcomes.iter().map(|o| o.elapsed_ms).collect();
            times.sort_by(f64::total_cmp);
            MethodSummary {
                method,
                coefficients,
                finite_count: used.len(),
                separated: count_status(FitStatus::Separated),
                not_converged: count_status(FitStatus::NotConverged),
                errors: count_status(FitStatus::Error),
                mean_time_ms: mean(times.iter().copied()),
                median_time_ms: quantile(&times, 0.5),
            }
        })
        .collect();

    let separation_count = methods
        .iter()
        .find(|m| m.method == Method::Mle)
        .map(|m| m.separated + m.not_converged + m.errors);

    let blocks = coefficient_blocks(&config.true_beta)
        .into_iter()
        .map(|(start, len)| BlockSummary {
            value: config.true_beta[start],
            start,
            len,
            methods: methods
                .iter()
                .map(|m| {
                    let coefs = &m.coefficients[start..start + len];
                    let bias: Vec<f64> = coefs.iter().map(|c| c.bias).collect();
                    let rmse: Vec<f64> = coefs.iter().map(|c| c.rmse).collect();
                    BlockMethodSummary {
                        method: m.method,
                        mean_abs_bias: m.mean_abs_bias(start..start + len),
                        mean_rmse: m.mean_rmse(start..start + len),
                        bias: Spread::of(&bias),
                        rmse: Spread::of(&rmse),
                    }
                })
                .collect(),
        })
        .collect();

    ScenarioReport {
        n: config.n,
        p: config.p,
        n_reps: config.n_reps,
        seed: config.seed,
        methods,
        separation_count,
        blocks,
    }
}

/// Maximal runs of equal consecutive values, or nothing when no value repeats.
fn coefficient_blocks(beta: &[f64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for j in 1..=beta.len() {
        if j == beta.len() || beta[j] != beta[start] {
            runs.push((start, j - start));
            start = j;
        }
    }
    if runs.iter().all(|&(_, len)| len == 1) {
        Vec::new()
    } else {
        runs
    }
}
