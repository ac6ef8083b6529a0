use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context};
use dylogit::penalties::{self, PriorSpec};
use dylogit::simulation::{run_scenario, run_scenario_parallel, ScenarioReport};
use dylogit::solvers::{detect_separation, wald_interval};
use dylogit::{BinomialDataset, Error, FitConfig, FitResult, Method, SeparationDiagnosis, SeparationKind};

use crate::input::{self, CsvSchema, Table};
use crate::sim_config;

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input (exit 1).
    Input(anyhow::Error),
    /// The data are fine but the requested estimate does not exist (exit 2).
    /// `output` is still printed, so a non-converged fit remains inspectable.
    Statistical { message: String, output: String },
}

impl Failure {
    fn statistical(message: String) -> Self {
        Failure::Statistical {
            message,
            output: String::new(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Statistical { .. } => 2,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "{e:#}"),
            Failure::Statistical { message, .. } => f.write_str(message),
        }
    }
}

pub type Outcome = Result<String, Failure>;

fn column_name(data: &BinomialDataset, j: usize) -> String {
    data.column_names()
        .map_or_else(|| format!("x{j}"), |names| names[j].clone())
}

/// Maps a library error on `data` to a failure with a user-facing message.
fn classify(err: Error, data: &BinomialDataset) -> Failure {
    match err {
        Error::RankDeficient => {
            let dependent = dylogit::linalg::dependent_columns(data.x());
            if dependent.is_empty() {
                Failure::Input(anyhow!("design matrix is numerically rank deficient"))
            } else {
                let names: Vec<String> = dependent
                    .iter()
                    .map(|&j| format!("'{}'", column_name(data, j)))
                    .collect();
                Failure::Input(anyhow!(
                    "design matrix is rank deficient: {} {} linear combination of earlier columns",
                    names.join(", "),
                    if names.len() == 1 { "is a" } else { "are each a" }
                ))
            }
        }
        Error::Separation(diag) => Failure::statistical(separation_message(&diag, data)),
        e @ (Error::NotConverged { .. } | Error::DegenerateShrinkage(_)) => Failure::statistical(e.to_string()),
        e => Failure::Input(e.into()),
    }
}

fn separation_message(diag: &SeparationDiagnosis, data: &BinomialDataset) -> String {
    let mut msg = format!(
        "maximum likelihood estimate does not exist: {} separation",
        diag.kind.as_str()
    );
    if let Some(j) = diag.dominant_coefficient() {
        let _ = write!(msg, "; separating direction is dominated by '{}'", column_name(data, j));
    }
    msg
}

pub struct FitArgs {
    pub method: Method,
    pub level: f64,
    pub json: bool,
    pub config: FitConfig,
}

pub fn fit(path: &Path, schema: &CsvSchema, args: &FitArgs) -> Outcome {
    let data = Table::read(path)?.dataset(schema)?;
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Failure::Input(anyhow!("--level must lie in (0, 1), got {}", args.level)));
    }
    let result = dylogit::fit(args.method, &data, &args.config).map_err(|e| classify(e, &data))?;
    let out = if args.json {
        serde_json::to_string_pretty(&result).context("serializing fit")? + "\n"
    } else {
        fit_table(&result, &data, args.level)
    };
    if result.converged {
        return Ok(out);
    }
    let message = match &result.separation {
        Some(diag) if diag.kind != SeparationKind::None => separation_message(diag, &data),
        _ => format!(
            "{} fit did not converge after {} iterations (max |score| = {:.3e})",
            result.method, result.iterations, result.final_grad_norm
        ),
    };
    Err(Failure::Statistical { message, output: out })
}

pub fn fit_table(fit: &FitResult, data: &BinomialDataset, level: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "method: {}  converged: {}  iterations: {}  max |score|: {:.2e}",
        fit.method, fit.converged, fit.iterations, fit.final_grad_norm
    );
    let intervals = wald_interval(fit, level).ok();
    let width = (0..data.p()).map(|j| column_name(data, j).len()).max().unwrap_or(0).max(4);
    let pct = format!("{:.1}%", 100.0 * level);
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>10}  {:>10}  {:>10}",
        "term",
        "estimate",
        "std.error",
        format!("lower {pct}"),
        format!("upper {pct}")
    );
    let na = || "NA".to_string();
    for j in 0..data.p() {
        let se = fit.std_errors.as_ref().map_or_else(na, |s| format!("{:.3}", s[j]));
        let (lo, hi) = intervals
            .as_ref()
            .map_or_else(|| (na(), na()), |ci| (format!("{:.3}", ci[j].0), format!("{:.3}", ci[j].1)));
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.3}  {:>10}  {:>10}  {:>10}",
            column_name(data, j),
            fit.beta[j],
            se,
            lo,
            hi
        );
    }
    out
}

pub fn detect(path: &Path, schema: &CsvSchema, json: bool) -> Outcome {
    let data = Table::read(path)?.dataset(schema)?;
    let diag = detect_separation(&data);
    if json {
        return Ok(serde_json::to_string_pretty(&diag).context("serializing diagnosis")? + "\n");
    }
    let mut out = format!("separation: {}\n", diag.kind.as_str());
    let _ = writeln!(
        out,
        "observations on the correct side of the direction: {} of {}",
        diag.separated, diag.observations
    );
    if let Some(dir) = &diag.direction {
        out.push_str("direction:\n");
        let width = (0..data.p()).map(|j| column_name(&data, j).len()).max().unwrap_or(0);
        for (j, v) in dir.iter().enumerate() {
            let _ = writeln!(out, "  {:<width$}  {v:>10.6}", column_name(&data, j));
        }
    }
    Ok(out)
}

pub fn simulate(config_path: &Path, out_dir: &Path) -> Outcome {
    let scenario = sim_config::load(config_path)?;
    let report = if scenario.parallel {
        run_scenario_parallel(&scenario.config)
    } else {
        run_scenario(&scenario.config)
    }
    .map_err(|e| Failure::Input(e.into()))?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let csv_path = out_dir.join("report.csv");
    let json_path = out_dir.join("summary.json");
    std::fs::write(&csv_path, report.to_csv()).with_context(|| format!("cannot write {}", csv_path.display()))?;
    let json = serde_json::to_string_pretty(&report).context("serializing report")?;
    std::fs::write(&json_path, json + "\n").with_context(|| format!("cannot write {}", json_path.display()))?;
    Ok(simulation_table(&report) + &format!("wrote {} and {}\n", csv_path.display(), json_path.display()))
}

pub fn simulation_table(report: &ScenarioReport) -> String {
    let mut out = format!(
        "n = {}, p = {}, replications = {}, seed = {}\n",
        report.n, report.p, report.n_reps, report.seed
    );
    if let Some(k) = report.separation_count {
        let _ = writeln!(out, "maximum likelihood failures: {k}");
    }
    let _ = writeln!(
        out,
        "{:<20}  {:>8}  {:>10}  {:>10}  {:>12}  {:>14}",
        "method", "finite", "mean|bias|", "mean rmse", "mean ms/fit", "median ms/fit"
    );
    for m in &report.methods {
        let _ = writeln!(
            out,
            "{:<20}  {:>8}  {:>10.3}  {:>10.3}  {:>12.3}  {:>14.3}",
            m.method.as_str(),
            m.finite_count,
            m.mean_abs_bias(0..report.p),
            m.mean_rmse(0..report.p),
            m.mean_time_ms,
            m.median_time_ms
        );
    }
    out
}

pub struct GridArgs {
    pub prior: penalties::PriorKind,
    pub range: (f64, f64),
    pub resolution: usize,
    pub cauchy_scale: Option<f64>,
    pub standardize: bool,
}

pub fn priors_grid(path: &Path, schema: &CsvSchema, args: &GridArgs, out_path: &Path) -> Outcome {
    let mut data = Table::read(path)?.dataset(schema)?;
    if args.standardize {
        data = input::standardize(&data)?;
    }
    let prior = match args.prior {
        penalties::PriorKind::Dy => PriorSpec::default_dy(&data),
        penalties::PriorKind::Jeffreys => PriorSpec::Jeffreys,
        penalties::PriorKind::Cauchy => PriorSpec::Cauchy {
            scales: args.cauchy_scale.map(|s| vec![s; data.p()]),
        },
    };
    let grid = penalties::prior_grid(&data, &prior, args.range, args.resolution).map_err(|e| match e {
        Error::DimensionMismatch { found, .. } => Failure::Input(anyhow!(
            "prior grids need exactly 2 coefficients after applying the schema, got {found}"
        )),
        e => classify(e, &data),
    })?;
    let mut csv = String::from("beta1,beta2,logdensity\n");
    for (b1, b2, v) in grid.points() {
        let _ = writeln!(csv, "{b1},{b2},{v}");
    }
    std::fs::write(out_path, csv).with_context(|| format!("cannot write {}", out_path.display()))?;
    let (i, j) = grid.argmax();
    Ok(format!(
        "wrote {}x{} grid to {}; maximum at ({}, {})\n",
        args.resolution,
        args.resolution,
        out_path.display(),
        grid.axis[i],
        grid.axis[j]
    ))
}
