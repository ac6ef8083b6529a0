//! `dylogit`: fit bias-reduced logistic regressions from CSV files.
//!
//! Exit codes: 0 success, 1 input error, 2 statistical failure (for example
//! a maximum likelihood fit on separated data).

mod commands;
mod input;
mod sim_config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dylogit::penalties::PriorKind;
use dylogit::{FitConfig, Method};

use commands::{Failure, FitArgs, GridArgs};
use input::CsvSchema;

#[derive(Parser)]
#[command(name = "dylogit", version, about = "Bias-reduced logistic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and print estimates, standard errors and Wald intervals.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "dy")]
        method: MethodArg,
        /// Confidence level of the Wald intervals.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Print the full fit result as JSON instead of a table.
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = FitConfig::default().max_iter)]
        max_iter: usize,
        /// Convergence threshold on the max-norm of the score.
        #[arg(long, default_value_t = FitConfig::default().grad_tol)]
        grad_tol: f64,
    },
    /// Check the data for complete or quasi-complete separation.
    Detect {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        json: bool,
    },
    /// Run a Monte Carlo scenario described by a TOML file.
    Simulate {
        config: PathBuf,
        /// Directory receiving report.csv and summary.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Evaluate a prior log-density on a grid over two coefficients.
    PriorsGrid {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "dy")]
        prior: PriorArg,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        hi: f64,
        /// Grid points per axis.
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        /// Cauchy scale for every coefficient (default 2.5).
        #[arg(long)]
        cauchy_scale: Option<f64>,
        /// Center and scale the design columns before evaluating the prior.
        #[arg(long)]
        standardize: bool,
        /// Output CSV with columns beta1,beta2,logdensity.
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV with a header row.
    csv: PathBuf,
    /// Column holding the number of successes.
    #[arg(long)]
    response: String,
    /// Column holding the number of trials; every row is one trial if omitted.
    #[arg(long)]
    trials: Option<String>,
    /// Comma-separated covariate columns; default is every other column.
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    /// Do not prepend a constant column.
    #[arg(long)]
    no_intercept: bool,
}

impl DataArgs {
    fn schema(&self) -> CsvSchema {
        CsvSchema {
            response: self.response.clone(),
            trials: self.trials.clone(),
            covariates: self.covariates.clone(),
            intercept: !self.no_intercept,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mle,
    Dy,
    Firth,
    Clogg,
    #[value(alias = "cm")]
    CordeiroMccullagh,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mle => Method::Mle,
            MethodArg::Dy => Method::Dy,
            MethodArg::Firth => Method::Firth,
            MethodArg::Clogg => Method::Clogg,
            MethodArg::CordeiroMccullagh => Method::CordeiroMccullagh,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorArg {
    Dy,
    Jeffreys,
    Cauchy,
}

impl From<PriorArg> for PriorKind {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Dy => PriorKind::Dy,
            PriorArg::Jeffreys => PriorKind::Jeffreys,
            PriorArg::Cauchy => PriorKind::Cauchy,
        }
    }
}

fn run(cli: Cli) -> commands::Outcome {
    match cli.command {
        Command::Fit {
            data,
            method,
            level,
            json,
            max_iter,
            grad_tol,
        } => {
            let args = FitArgs {
                method: method.into(),
                level,
                json,
                config: FitConfig {
                    max_iter,
                    grad_tol,
                    ..FitConfig::default()
                },
            };
            commands::fit(&data.csv, &data.schema(), &args)
        }
        Command::Detect { data, json } => commands::detect(&data.csv, &data.schema(), json),
        Command::Simulate { config, out_dir } => commands::simulate(&config, &out_dir),
        Command::PriorsGrid {
            data,
            prior,
            lo,
            hi,
            resolution,
            cauchy_scale,
            standardize,
            out,
        } => {
            let args = GridArgs {
                prior: prior.into(),
                range: (lo, hi),
                resolution,
                cauchy_scale,
                standardize,
            };
            commands::priors_grid(&data.csv, &data.schema(), &args, &out)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors are input errors; --help and --version succeed
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => print!("{out}"),
        Err(failure) => {
            if let Failure::Statistical { output, .. } = &failure {
                print!("{output}");
            }
            eprintln!("error: {failure}");
            std::process::exit(failure.exit_code());
        }
    }
}
