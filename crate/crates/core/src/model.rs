//! Binomial logistic model primitives.
//!
//! Responses are stored as reals so that pseudo-counts and fractional trial
//! weights travel through exactly the same code as observed counts. Only
//! [`disaggregate`] insists on integer data.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::math::{sigmoid, sigmoid_variance, softplus};

/// Tolerance used when checking that a count is integer-valued.
pub const INTEGER_TOL: f64 = 1e-9;

/// Binomial regression data: design `x` (n x p), successes `y`, trials `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialDataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    m: DVector<f64>,
    column_names: Option<Vec<String>>,
}

impl BinomialDataset {
    /// Validates shapes, finiteness and `0 <= y_i <= m_i`, `m_i > 0`.
    ///
    /// Trials are real-valued so that fractional corrections (Clogg) can be
    /// represented; integrality is only enforced where an operation needs it.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, m: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || p == 0 {
            return Err(Error::InvalidData(format!(
                "design must have at least one row and one column, got {n}x{p}"
            )));
        }
        check_len("responses", n, y.len())?;
        check_len("trials", n, m.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trials"));
        }
        for i in 0..n {
            if !(m[i] > 0.0) {
                return Err(Error::InvalidData(format!(
                    "row {i}: trials must be positive, got {}",
                    m[i]
                )));
            }
            if y[i] < 0.0 || y[i] > m[i] {
                return Err(Error::InvalidData(format!(
                    "row {i}: response {} outside [0, {}]",
                    y[i], m[i]
                )));
            }
        }
        Ok(Self {
            x,
            y,
            m,
            column_names: None,
        })
    }

    /// Binary responses, one trial per row.
    pub fn binary(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let n = x.nrows();
        Self::new(x, y, DVector::from_element(n, 1.0))
    }

    /// Convenience constructor from row slices.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64], m: &[f64]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::InvalidData(format!(
                    "row {i} has {} columns, expected {p}",
                    r.len()
                )));
            }
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(x, DVector::from_column_slice(y), DVector::from_column_slice(m))
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        check_len("column names", self.p(), names.len())?;
        self.column_names = Some(names);
        Ok(self)
    }

    /// Same design and trials, new responses.
    pub fn with_responses(&self, y: DVector<f64>) -> Result<Self> {
        let mut out = Self::new(self.x.clone(), y, self.m.clone())?;
        out.column_names = self.column_names.clone();
        Ok(out)
    }

    /// Same design, new responses and trials.
    pub fn with_counts(&self, y: DVector<f64>, m: DVector<f64>) -> Result<Self> {
        let mut out = Self::new(self.x.clone(), y, m)?;
        out.column_names = self.column_names.clone();
        Ok(out)
    }

    /// Same responses and trials, new design (column names are dropped
    /// unless the column count is unchanged).
    pub fn with_design(&self, x: DMatrix<f64>) -> Result<Self> {
        let keep = x.ncols() == self.p();
        let mut out = Self::new(x, self.y.clone(), self.m.clone())?;
        if keep {
            out.column_names = self.column_names.clone();
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn m(&self) -> &DVector<f64> {
        &self.m
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Total number of trials, `sum_i m_i`.
    pub fn total_trials(&self) -> f64 {
        self.m.sum()
    }

    pub fn total_successes(&self) -> f64 {
        self.y.sum()
    }

    pub fn is_integer(&self) -> bool {
        self.y
            .iter()
            .chain(self.m.iter())
            .all(|v| (v - v.round()).abs() <= INTEGER_TOL)
    }

    pub(crate) fn check_beta(&self, beta: &DVector<f64>) -> Result<()> {
        check_len("coefficients", self.p(), beta.len())?;
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficients"));
        }
        Ok(())
    }

    pub(crate) fn check_integer(&self) -> Result<()> {
        for i in 0..self.n() {
            for (what, v) in [("responses", self.y[i]), ("trials", self.m[i])] {
                if (v - v.round()).abs() > INTEGER_TOL {
                    return Err(Error::NonInteger {
                        what,
                        row: i,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Linear predictor, fitted probabilities and IRLS weights at a given `beta`.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub beta: DVector<f64>,
    pub eta: DVector<f64>,
    pub pi: DVector<f64>,
    /// `m_i pi_i (1 - pi_i)`
    pub weights: DVector<f64>,
}

impl ModelState {
    pub fn new(beta: &DVector<f64>, data: &BinomialDataset) -> Result<Self> {
        data.check_beta(beta)?;
        let eta = data.x() * beta;
        let pi = eta.map(sigmoid);
        let weights = eta.zip_map(data.m(), |e, mi| mi * sigmoid_variance(e));
        Ok(Self {
            beta: beta.clone(),
            eta,
            pi,
            weights,
        })
    }

    pub fn log_likelihood(&self, data: &BinomialDataset) -> f64 {
        loglik_from_eta(&self.eta, data)
    }

    /// `X'(y - m * pi)`
    pub fn score(&self, data: &BinomialDataset) -> DVector<f64> {
        let resid = data.y() - data.m().component_mul(&self.pi);
        data.x().tr_mul(&resid)
    }

    pub fn fisher_information(&self, data: &BinomialDataset) -> DMatrix<f64> {
        linalg::weighted_gram(data.x(), &self.weights)
    }

    /// Hat-matrix diagonal; see [`leverages`].
    pub fn leverages(&self, data: &BinomialDataset) -> Result<DVector<f64>> {
        Ok(self.leverages_and_information(data)?.0)
    }

    /// Leverages together with the Cholesky factor of the information they
    /// were computed from, so callers can reuse the factorization.
    pub(crate) fn leverages_and_information(
        &self,
        data: &BinomialDataset,
    ) -> Result<(DVector<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>)> {
        let xw = linalg::scale_rows(data.x(), &self.weights.map(f64::sqrt));
        let chol = linalg::cholesky(xw.tr_mul(&xw))?;
        // h_i = || L^{-1} w_i^{1/2} x_i ||^2
        let z = chol
            .l_dirty()
            .solve_lower_triangular(&xw.transpose())
            .ok_or(Error::RankDeficient)?;
        let h = DVector::from_iterator(
            data.n(),
            z.column_iter().map(|c| c.norm_squared()),
        );
        Ok((h, chol))
    }
}

fn loglik_from_eta(eta: &DVector<f64>, data: &BinomialDataset) -> f64 {
    eta.iter()
        .zip(data.y().iter())
        .zip(data.m().iter())
        .map(|((&e, &y), &m)| y * e - m * softplus(e))
        .sum()
}

/// Fitted success probabilities `sigmoid(x_i' beta)`.
pub fn predict_probs(beta: &DVector<f64>, data: &BinomialDataset) -> Result<DVector<f64>> {
    data.check_beta(beta)?;
    Ok((data.x() * beta).map(sigmoid))
}

/// Binomial log-likelihood without the combinatorial constant.
pub fn log_likelihood(beta: &DVector<f64>, data: &BinomialDataset) -> Result<f64> {
    data.check_beta(beta)?;
    Ok(loglik_from_eta(&(data.x() * beta), data))
}

pub fn score(beta: &DVector<f64>, data: &BinomialDataset) -> Result<DVector<f64>> {
    Ok(ModelState::new(beta, data)?.score(data))
}

/// Expected (equal to observed, for the canonical link) information `X'WX`.
pub fn fisher_information(beta: &DVector<f64>, data: &BinomialDataset) -> Result<DMatrix<f64>> {
    Ok(ModelState::new(beta, data)?.fisher_information(data))
}

/// Diagonal of `W^{1/2} X (X'WX)^{-1} X' W^{1/2}`, computed from a Cholesky
/// factor of `X'WX` without forming the n x n projection.
pub fn leverages(beta: &DVector<f64>, data: &BinomialDataset) -> Result<DVector<f64>> {
    ModelState::new(beta, data)?.leverages(data)
}

/// Expands each binomial row into `m_i` Bernoulli rows: `y_i` ones followed
/// by `m_i - y_i` zeros, group order preserved.
pub fn disaggregate(data: &BinomialDataset) -> Result<BinomialDataset> {
    data.check_integer()?;
    let total = data.total_trials().round() as usize;
    let p = data.p();
    let mut x = DMatrix::zeros(total, p);
    let mut y = DVector::zeros(total);
    let mut row = 0;
    for i in 0..data.n() {
        let mi = data.m()[i].round() as usize;
        let yi = data.y()[i].round() as usize;
        for j in 0..mi {
            x.row_mut(row).copy_from(&data.x().row(i));
            y[row] = if j < yi { 1.0 } else { 0.0 };
            row += 1;
        }
    }
    let out = BinomialDataset::binary(x, y)?;
    match data.column_names() {
        Some(names) => out.with_column_names(names.to_vec()),
        None => Ok(out),
    }
}

/// Merges rows with bitwise-identical covariate vectors, summing `y` and `m`.
/// Output rows follow the order of first appearance.
pub fn aggregate(data: &BinomialDataset) -> BinomialDataset {
    let p = data.p();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut rows: Vec<usize> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    let mut m: Vec<f64> = Vec::new();
    for i in 0..data.n() {
        let key: Vec<u64> = data.x().row(i).iter().map(|v| v.to_bits()).collect();
        match index.get(&key) {
            Some(&g) => {
                y[g] += data.y()[i];
                m[g] += data.m()[i];
            }
            None => {
                index.insert(key, rows.len());
                rows.push(i);
                y.push(data.y()[i]);
                m.push(data.m()[i]);
            }
        }
    }
    let x = DMatrix::from_fn(rows.len(), p, |g, j| data.x()[(rows[g], j)]);
    BinomialDataset {
        x,
        y: DVector::from_vec(y),
        m: DVector::from_vec(m),
        column_names: data.column_names.clone(),
    }
}
