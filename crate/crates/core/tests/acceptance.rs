//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use common::{max_abs_diff, rng};
use dylogit::model::{self, BinomialDataset};
use dylogit::penalties::{self, PriorSpec};
use dylogit::simulation::{self, Design, ScenarioConfig};
use dylogit::solvers::{self, firth_score, fit_clogg, fit_dy, fit_firth, fit_mle};
use dylogit::{FitConfig, Method, SeparationKind};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> dylogit::Result<Outcome>;

fn within(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

fn endometrial_golden() -> dylogit::Result<Outcome> {
    let start = Instant::now();
    let data = common::endometrial();
    let cfg = FitConfig::default();
    let dy = fit_dy(&data, &cfg)?;
    let firth = fit_firth(&data, &cfg)?;
    let clogg = fit_clogg(&data, &cfg)?;
    let mle = fit_mle(&data, &cfg)?;
    let elapsed = start.elapsed();

    let deviations = [
        max_abs_diff(&dy.beta, &[3.579, 3.431, -0.034, -2.458]),
        max_abs_diff(dy.std_errors.as_deref().unwrap_or(&[]), &[1.459, 1.893, 0.040, 0.748]),
        max_abs_diff(&firth.beta, &[3.775, 2.929, -0.035, -2.604]),
        max_abs_diff(firth.std_errors.as_deref().unwrap_or(&[]), &[1.489, 1.551, 0.040, 0.776]),
        max_abs_diff(&clogg.beta, &[3.622, 3.223, -0.034, -2.511]),
    ];
    let worst = deviations.iter().copied().fold(0.0, f64::max);
    let complete = dy.std_errors.is_some() && firth.std_errors.is_some();
    let mle_flag = mle.separation.as_ref().map(|s| (s.kind, s.dominant_coefficient()));
    let mle_ok = !mle.converged && mle_flag == Some((SeparationKind::QuasiComplete, Some(1)));
    Ok(Outcome::new(
        complete && worst <= 0.005 && mle_ok && within(elapsed, 1.0),
        format!(
            "max deviation {worst:.4} (tol 0.005); MLE converged={} separation={:?}; {:.3}s",
            mle.converged,
            mle_flag,
            elapsed.as_secs_f64()
        ),
    ))
}

fn likelihood_identity() -> dylogit::Result<Outcome> {
    let start = Instant::now();
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(2..=100);
        let p = r.random_range(1..=10usize.min(n));
        let data = common::random_dataset(&mut r, n, p, 6, 0.8);
        let pseudo = penalties::pseudo_counts_default(&data)?;
        let factor = data.p() as f64 / data.total_trials() + 1.0;
        for _ in 0..20 {
            let beta = common::random_beta(&mut r, p, 1.5);
            let lhs = penalties::penalized_loglik_dy(&beta, &data)?;
            let rhs = factor * model::log_likelihood(&beta, &pseudo)?;
            worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
        }
    }
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        worst < 1e-9 && within(elapsed, 5.0),
        format!("max scaled gap {worst:.2e} over 1000 evaluations; {:.3}s", elapsed.as_secs_f64()),
    ))
}

/// Binary data split by a random hyperplane. When `quasi`, one point is moved
/// onto the hyperplane and duplicated with the opposite label.
fn separated_dataset(r: &mut impl Rng, quasi: bool) -> BinomialDataset {
    loop {
        let p = r.random_range(2..=5);
        let n = r.random_range((2 * p + 4)..=60);
        let mut x = common::gaussian_design(r, n, p);
        let b = common::random_beta(r, p, 1.0);
        let bz = b.rows(1, p - 1).into_owned();
        if bz.norm() < 0.1 {
            continue;
        }
        if quasi {
            let z = x.view((0, 1), (1, p - 1)).transpose();
            let offset = (b[0] + z.dot(&bz)) / bz.norm_squared();
            for j in 1..p {
                x[(0, j)] -= offset * bz[j - 1];
            }
            x = x.insert_row(n, 0.0);
            let first = x.row(0).into_owned();
            x.set_row(n, &first);
        }
        let rows = x.nrows();
        let eta = &x * &b;
        let mut y = DVector::from_fn(rows, |i, _| if eta[i] > 0.0 { 1.0 } else { 0.0 });
        if quasi {
            y[0] = 1.0;
            y[rows - 1] = 0.0;
        }
        let successes = y.sum();
        if successes < 2.0 || successes > rows as f64 - 2.0 {
            continue;
        }
        if !dylogit::linalg::dependent_columns(&x).is_empty() {
            continue;
        }
        return BinomialDataset::binary(x, y).unwrap();
    }
}

fn existence_under_separation() -> dylogit::Result<Outcome> {
    let start = Instant::now();
    let mut r = rng(3);
    let cfg = FitConfig::default();
    let (mut dy_ok, mut firth_ok, mut mle_flagged, mut kind_match) = (0, 0, 0, 0);
    for k in 0..100 {
        let quasi = k % 2 == 1;
        let data = separated_dataset(&mut r, quasi);
        let good = |f: &dylogit::FitResult| {
            f.converged && f.final_grad_norm < 1e-8 && f.beta.iter().all(|b| b.is_finite())
        };
        if fit_dy(&data, &cfg).is_ok_and(|f| good(&f)) {
            dy_ok += 1;
        }
        if fit_firth(&data, &cfg).is_ok_and(|f| good(&f)) {
            firth_ok += 1;
        }
        let mle = fit_mle(&data, &cfg)?;
        let kind = mle.separation.as_ref().map(|s| s.kind);
        if !mle.converged && kind.is_some_and(|k| k != SeparationKind::None) {
            mle_flagged += 1;
        }
        let expected = if quasi {
            SeparationKind::QuasiComplete
        } else {
            SeparationKind::Complete
        };
        if kind == Some(expected) {
            kind_match += 1;
        }
    }
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        dy_ok == 100 && firth_ok == 100 && mle_flagged == 100 && within(elapsed, 30.0),
        format!(
            "DY {dy_ok}/100, Firth {firth_ok}/100, MLE flagged {mle_flagged}/100 (kind as constructed {kind_match}/100); {:.3}s",
            elapsed.as_secs_f64()
        ),
    ))
}

fn score_cross_check() -> dylogit::Result<Outcome> {
    let start = Instant::now();
    let mut r = rng(4);
    let cfg = FitConfig::default();
    let (mut dy_worst, mut firth_worst): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let n = r.random_range(10..=80);
        let p = r.random_range(1..=6);
        let data = common::random_dataset(&mut r, n, p, 5, 0.7);
        let dy = fit_dy(&data, &cfg)?;
        dy_worst = dy_worst.max(penalties::penalized_score_dy(&dy.beta_vector(), &data)?.amax());
        let firth = fit_firth(&data, &cfg)?;
        firth_worst = firth_worst.max(firth_score(&firth.beta_vector(), &data)?.amax());
    }
    Ok(Outcome::new(
        dy_worst < 1e-7 && firth_worst < 1e-7,
        format!(
            "max |U| DY {dy_worst:.2e}, Firth {firth_worst:.2e} over 50 fits; {:.3}s",
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn saturated_agreement() -> dylogit::Result<Outcome> {
    let start = Instant::now();
    let mut r = rng(5);
    let cfg = FitConfig::default();
    let (mut gap, mut lev): (f64, f64) = (0.0, 0.0);
    for _ in 0..25 {
        let n = r.random_range(1..=8);
        let x = loop {
            let x = common::gaussian_design(&mut r, n, n);
            let sv = x.singular_values();
            if sv.min() > 0.2 {
                break x;
            }
        };
        let trials = r.random_range(1..=10) as f64;
        let y = DVector::from_fn(n, |_, _| r.random_range(0..=trials as u64) as f64);
        let data = BinomialDataset::new(x, y, DVector::from_element(n, trials))?;
        let firth = fit_firth(&data, &cfg)?;
        let dy = fit_dy(&data, &cfg)?;
        gap = gap.max(max_abs_diff(&firth.beta, &dy.beta));
        for beta in [firth.beta_vector(), dy.beta_vector()] {
            let h = model::leverages(&beta, &data)?;
            lev = lev.max(h.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));
        }
    }
    Ok(Outcome::new(
        gap < 1e-6 && lev < 1e-9,
        format!(
            "max |Firth - DY| {gap:.2e}, max |h - 1| {lev:.2e}; {:.3}s",
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn aggregation_invariance() -> dylogit::Result<Outcome> {
    let start = Instant::now();
    let mut r = rng(6);
    let cfg = FitConfig::default();
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 25 {
        let k = r.random_range(4..=15);
        let p = r.random_range(1..=4usize.min(k - 1));
        let grouped = common::random_dataset(&mut r, k, p, 8, 0.5);
        let binary = model::disaggregate(&grouped)?;
        let mle = fit_mle(&grouped, &cfg)?;
        if !mle.converged {
            continue;
        }
        for method in [Method::Mle, Method::Dy, Method::Firth] {
            let a = solvers::fit(method, &grouped, &cfg)?;
            let b = solvers::fit(method, &binary, &cfg)?;
            worst = worst.max(max_abs_diff(&a.beta, &b.beta));
        }
        done += 1;
    }
    let grouped = BinomialDataset::from_rows(
        &[vec![1.0, 0.0], vec![1.0, 1.0]],
        &[1.0, 12.0],
        &[4.0, 16.0],
    )?;
    let a = fit_clogg(&grouped, &cfg)?;
    let b = fit_clogg(&model::disaggregate(&grouped)?, &cfg)?;
    let clogg_gap = max_abs_diff(&a.beta, &b.beta);
    Ok(Outcome::new(
        worst < 1e-8 && clogg_gap > 1e-3,
        format!(
            "max MLE/DY/Firth gap {worst:.2e} over 25 datasets; Clogg gap {clogg_gap:.3}; {:.3}s",
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn highdim_replica() -> dylogit::Result<Outcome> {
    let start = Instant::now();
    let p = 50;
    let truth = simulation::make_highdim_beta(p)?;
    let mut config = ScenarioConfig::new(250, p, 200, 7, truth, Design::GaussianScaled);
    config.methods = vec![Method::Mle, Method::Dy, Method::Firth];
    let report = simulation::run_scenario(&config)?;
    let elapsed = start.elapsed();
    let get = |m| report.method(m).expect("requested method");
    let (mle, dy, firth) = (get(Method::Mle), get(Method::Dy), get(Method::Firth));

    let mut bias_ok = true;
    let mut bias_detail = Vec::new();
    for block in report.blocks.iter().filter(|b| b.value != 0.0) {
        let range = block.start..block.start + block.len;
        let (d, m) = (dy.mean_abs_bias(range.clone()), mle.mean_abs_bias(range));
        bias_ok &= d < m;
        bias_detail.push(format!("{}: {d:.3}<{m:.3}", block.value));
    }
    let (rmse_dy, rmse_firth) = (dy.mean_rmse(0..p), firth.mean_rmse(0..p));
    let ratio = dy.mean_time_ms / firth.mean_time_ms;
    let parts = [bias_ok, rmse_dy <= rmse_firth, ratio <= 0.1];
    Ok(Outcome::new(
        parts.iter().all(|&b| b) && within(elapsed, 600.0),
        format!(
            "(a) {} |bias| DY<MLE [{}] (MLE finite {}/200); (b) {} RMSE DY {rmse_dy:.3} <= Firth {rmse_firth:.3}; \
             (c) {} time DY {:.3} ms / Firth {:.3} ms = {ratio:.3} (need <= 0.1); {:.1}s",
            if parts[0] { "ok" } else { "FAIL" },
            bias_detail.join(", "),
            mle.finite_count,
            if parts[1] { "ok" } else { "FAIL" },
            if parts[2] { "ok" } else { "FAIL" },
            dy.mean_time_ms,
            firth.mean_time_ms,
            elapsed.as_secs_f64()
        ),
    ))
}

fn finite_differences() -> dylogit::Result<Outcome> {
    let start = Instant::now();
    let mut r = rng(8);
    let (mut score_err, mut info_err, mut lev_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let n = r.random_range(10..=60);
        let p = r.random_range(1..=6);
        let data = common::random_dataset(&mut r, n, p, 5, 0.5);
        let beta = common::random_beta(&mut r, p, 0.7);

        let u = model::score(&beta, &data)?;
        let info = model::fisher_information(&beta, &data)?;
        let mut num_u = DVector::zeros(p);
        let mut num_h = DMatrix::zeros(p, p);
        for j in 0..p {
            let h = 1e-5 * beta[j].abs().max(1.0);
            let (mut plus, mut minus) = (beta.clone(), beta.clone());
            plus[j] += h;
            minus[j] -= h;
            num_u[j] = (model::log_likelihood(&plus, &data)? - model::log_likelihood(&minus, &data)?) / (2.0 * h);
            let col = (model::score(&plus, &data)? - model::score(&minus, &data)?) / (2.0 * h);
            num_h.set_column(j, &col);
        }
        score_err = score_err.max((&num_u - &u).amax() / u.amax().max(1.0));
        info_err = info_err.max((&num_h + &info).amax() / info.amax().max(1.0));

        let lev = model::leverages(&beta, &data)?;
        lev_err = lev_err.max((lev.sum() - p as f64).abs());
    }
    Ok(Outcome::new(
        score_err < 1e-6 && info_err < 1e-5 && lev_err < 1e-8,
        format!(
            "score rel err {score_err:.2e}, information rel err {info_err:.2e}, |sum h - p| {lev_err:.2e}; {:.3}s",
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn wald_coverage() -> dylogit::Result<Outcome> {
    let start = Instant::now();
    let n = 500;
    let mut r = rng(9);
    let x = common::gaussian_design(&mut r, n, 3);
    let mut config = ScenarioConfig::new(n, 3, 500, 9, vec![0.5, -1.0, 0.25], Design::FixedMatrix(x));
    config.methods = vec![Method::Dy];
    config.coverage_level = Some(0.95);
    let report = simulation::run_scenario(&config)?;
    let elapsed = start.elapsed();
    let dy = report.method(Method::Dy).expect("requested method");
    let rates: Vec<f64> = dy.coefficients.iter().map(|c| c.coverage.unwrap_or(f64::NAN)).collect();
    let ok = dy.finite_count == 500 && rates.iter().all(|c| (0.92..=0.975).contains(c));
    Ok(Outcome::new(
        ok && within(elapsed, 120.0),
        format!(
            "coverage {:?} (need [0.92, 0.975]); {:.1}s",
            rates.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    ))
}

/// Largest `|f(i,j) - f(i,0) - f(0,j) + f(0,0)|`; zero iff the grid is additive.
fn interaction(values: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..values.nrows() {
        for j in 0..values.ncols() {
            let v = values[(i, j)] - values[(i, 0)] - values[(0, j)] + values[(0, 0)];
            worst = worst.max(v.abs());
        }
    }
    worst
}

fn prior_grids() -> dylogit::Result<Outcome> {
    let start = Instant::now();
    let mut r = rng(10);
    let n = 100;
    let rho: f64 = 0.7;
    let mut x = DMatrix::from_fn(n, 2, |_, _| r.sample::<f64, _>(StandardNormal));
    for i in 0..n {
        x[(i, 1)] = rho * x[(i, 0)] + (1.0 - rho * rho).sqrt() * x[(i, 1)];
    }
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / (n - 1) as f64).sqrt();
        col /= sd;
    }
    let y = DVector::from_fn(n, |i, _| (i % 2) as f64);
    let data = BinomialDataset::binary(x, y)?;
    let range = (-4.0, 4.0);
    let res = 81;
    let dy = penalties::prior_grid(&data, &PriorSpec::default_dy(&data), range, res)?;
    let jeffreys = penalties::prior_grid(&data, &PriorSpec::Jeffreys, range, res)?;
    let cauchy = penalties::prior_grid(&data, &PriorSpec::cauchy(), range, res)?;
    let mode = dy.argmax();
    let origin = (res / 2, res / 2);
    let (ci, di, ji) = (
        interaction(&cauchy.values),
        interaction(&dy.values),
        interaction(&jeffreys.values),
    );
    Ok(Outcome::new(
        mode == origin && dy.axis[origin.0] == 0.0 && ci < 1e-12 && di > 1e-3 && ji > 1e-3,
        format!(
            "DY mode at {:?}; interaction Cauchy {ci:.1e}, DY {di:.2}, Jeffreys {ji:.2}; {:.3}s",
            (dy.axis[mode.0], dy.axis[mode.1]),
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("endometrial golden values", endometrial_golden),
        ("likelihood identity", likelihood_identity),
        ("existence under separation", existence_under_separation),
        ("score equation cross-check", score_cross_check),
        ("saturated model agreement", saturated_agreement),
        ("aggregation invariance", aggregation_invariance),
        ("high-dimensional replica", highdim_replica),
        ("finite-difference suite", finite_differences),
        ("Wald coverage", wald_coverage),
        ("prior grids", prior_grids),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        if !outcome.passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({})",
            k + 1,
            if outcome.passed { "PASS" } else { "FAIL" },
            name,
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
