//! TOML description of a Monte Carlo scenario.
//!
//! ```toml
//! n = 250
//! p = 50
//! n_reps = 200
//! seed = 7
//! true_beta = "blocks"          # or an explicit list of p numbers
//! methods = ["mle", "dy", "firth"]
//! trials = 1                    # or a list of n integers
//! coverage_level = 0.95         # optional
//! parallel = false              # replications across threads
//!
//! [design]
//! kind = "gaussian_scaled"      # or "correlated_gaussian" with rho,
//!                               # or "fixed_matrix" with path to a headerless CSV
//!
//! [fit]                         # optional
//! max_iter = 100
//! grad_tol = 1e-8
//! step_halving_max = 20
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dylogit::simulation::{make_highdim_beta, Design, ScenarioConfig};
use dylogit::{FitConfig, Method};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::input::parse_number;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: usize,
    pub p: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub true_beta: TrueBeta,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub trials: Trials,
    pub coverage_level: Option<f64>,
    #[serde(default)]
    pub parallel: bool,
    pub design: DesignSpec,
    #[serde(default)]
    pub fit: FitSection,
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum TrueBeta {
    Values(Vec<f64>),
    /// `"blocks"`: five equal blocks at -3, -1.5, 0, 1.5, 3.
    Named(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Trials {
    Constant(u64),
    PerRow(Vec<u64>),
}

impl Default for Trials {
    fn default() -> Self {
        Trials::Constant(1)
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    GaussianScaled,
    CorrelatedGaussian { rho: f64 },
    FixedMatrix { path: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "defaults::max_iter")]
    pub max_iter: usize,
    #[serde(default = "defaults::grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "defaults::step_halving_max")]
    pub step_halving_max: usize,
}

mod defaults {
    pub fn max_iter() -> usize {
        dylogit::FitConfig::default().max_iter
    }
    pub fn grad_tol() -> f64 {
        dylogit::FitConfig::default().grad_tol
    }
    pub fn step_halving_max() -> usize {
        dylogit::FitConfig::default().step_halving_max
    }
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            max_iter: defaults::max_iter(),
            grad_tol: defaults::grad_tol(),
            step_halving_max: defaults::step_halving_max(),
        }
    }
}

pub struct Scenario {
    pub config: ScenarioConfig,
    pub parallel: bool,
}

/// Reads and validates a scenario; relative design paths resolve against the
/// config file's directory.
pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: ConfigFile = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    file.into_scenario(base)
}

impl ConfigFile {
    pub fn into_scenario(self, base: &Path) -> Result<Scenario> {
        let true_beta = match self.true_beta {
            TrueBeta::Values(v) => v,
            TrueBeta::Named(name) if name == "blocks" => {
                make_highdim_beta(self.p).context("field `true_beta`")?
            }
            TrueBeta::Named(name) => bail!("field `true_beta`: unknown preset '{name}' (expected \"blocks\" or a list)"),
        };
        let trials = match self.trials {
            Trials::Constant(m) => vec![m; self.n],
            Trials::PerRow(v) => v,
        };
        let design = match self.design {
            DesignSpec::GaussianScaled => Design::GaussianScaled,
            DesignSpec::CorrelatedGaussian { rho } => Design::CorrelatedGaussian { rho },
            DesignSpec::FixedMatrix { path } => {
                let full = base.join(&path);
                Design::FixedMatrix(read_matrix(&full).with_context(|| format!("field `design.path` ({})", full.display()))?)
            }
        };
        let config = ScenarioConfig {
            n: self.n,
            p: self.p,
            n_reps: self.n_reps,
            seed: self.seed,
            true_beta,
            design,
            trials,
            methods: self.methods,
            fit: FitConfig {
                max_iter: self.fit.max_iter,
                grad_tol: self.fit.grad_tol,
                step_halving_max: self.fit.step_halving_max,
                start: None,
            },
            coverage_level: self.coverage_level,
        };
        config.validate()?;
        Ok(Scenario {
            config,
            parallel: self.parallel,
        })
    }
}

/// Headerless numeric CSV.
fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .map(parse_number)
            .collect::<Result<Vec<_>>>()
            .with_context(|| format!("line {line}"))?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("empty matrix");
    }
    let p = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}
