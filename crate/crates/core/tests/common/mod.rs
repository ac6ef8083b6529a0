#![allow(dead_code)]

use std::path::Path;

use dylogit::BinomialDataset;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Endometrial cancer data: intercept, NV, PI, EH against HG.
pub fn endometrial() -> BinomialDataset {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/endometrial.csv");
    let text = std::fs::read_to_string(path).expect("endometrial data");
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let v: Vec<f64> = line.split(',').map(|t| t.trim().parse().unwrap()).collect();
        rows.push(vec![1.0, v[0], v[1], v[2]]);
        y.push(v[3]);
    }
    let m = vec![1.0; y.len()];
    BinomialDataset::from_rows(&rows, &y, &m)
        .unwrap()
        .with_column_names(["(Intercept)", "NV", "PI", "EH"].map(String::from).to_vec())
        .unwrap()
}

/// Intercept plus standard normal covariates.
pub fn gaussian_design(rng: &mut impl Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, j| {
        if j == 0 {
            1.0
        } else {
            rng.sample::<f64, _>(StandardNormal)
        }
    })
}

pub fn random_beta(rng: &mut impl Rng, p: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(p, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Binomial responses from the logistic model with trials drawn from `1..=max_trials`.
pub fn random_dataset(
    rng: &mut impl Rng,
    n: usize,
    p: usize,
    max_trials: u64,
    beta_scale: f64,
) -> BinomialDataset {
    let x = gaussian_design(rng, n, p);
    let beta = random_beta(rng, p, beta_scale);
    let eta = &x * &beta;
    let m: Vec<u64> = (0..n).map(|_| rng.random_range(1..=max_trials)).collect();
    let y = DVector::from_fn(n, |i, _| {
        let pi = dylogit::math::sigmoid(eta[i]);
        Binomial::new(m[i], pi).unwrap().sample(rng) as f64
    });
    let m = DVector::from_iterator(n, m.iter().map(|&v| v as f64));
    BinomialDataset::new(x, y, m).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Full-rank integer datasets: intercept plus `p - 1` uniform covariates,
/// trials in `1..=max_m`, successes spread over `0..=m_i`.
pub fn datasets(
    max_n: usize,
    max_p: usize,
    max_m: u32,
) -> impl proptest::strategy::Strategy<Value = BinomialDataset> {
    use proptest::prelude::*;
    (1..=max_p)
        .prop_flat_map(move |p| (Just(p), (p + 1).max(2)..=max_n.max(p + 1)))
        .prop_flat_map(move |(p, n)| {
            (
                Just(n),
                Just(p),
                prop::collection::vec(-2.0..2.0f64, n * (p - 1)),
                prop::collection::vec(1..=max_m, n),
                prop::collection::vec(0.0..=1.0f64, n),
            )
        })
        .prop_filter_map("full column rank", |(n, p, xs, m, u)| {
            let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { xs[i * (p - 1) + j - 1] });
            if !dylogit::linalg::dependent_columns(&x).is_empty() {
                return None;
            }
            let m = DVector::from_iterator(n, m.iter().map(|&v| v as f64));
            let y = DVector::from_fn(n, |i, _| (u[i] * m[i]).round());
            BinomialDataset::new(x, y, m).ok()
        })
}

pub fn betas(p: usize, scale: f64) -> impl proptest::strategy::Strategy<Value = DVector<f64>> {
    use proptest::prelude::*;
    prop::collection::vec(-scale..scale, p).prop_map(DVector::from_vec)
}

/// A dataset together with a coefficient vector of matching length.
pub fn dataset_and_beta(
    max_n: usize,
    max_p: usize,
    max_m: u32,
    scale: f64,
) -> impl proptest::strategy::Strategy<Value = (BinomialDataset, DVector<f64>)> {
    use proptest::prelude::*;
    datasets(max_n, max_p, max_m).prop_flat_map(move |d| {
        let p = d.p();
        (Just(d), betas(p, scale))
    })
}
