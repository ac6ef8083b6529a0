//! Detection of complete and quasi-complete separation.
//!
//! With `a_k = (2 y_k - 1) x_k` over Bernoulli observations `k`, the program
//!
//! ```text
//! maximize  sum_k s_k   s.t.  a_k' b >= s_k,  0 <= s_k <= 1,  b free
//! ```
//!
//! has optimum 0 exactly when no direction `b` separates the data. Because
//! `b` can be rescaled freely, every observation on the strict side of a
//! weakly separating direction reaches `s_k = 1`, so the optimum counts the
//! strictly separated observations. Replicated binomial rows enter once
//! per side with their count as weight, which is equivalent to the
//! disaggregated program.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::simplex::{self, LpOutcome};
use crate::model::BinomialDataset;

/// Slack values above this count as strictly separated.
const SATISFIED: f64 = 1.0 - 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationKind {
    None,
    QuasiComplete,
    Complete,
}

impl SeparationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeparationKind::None => "none",
            SeparationKind::QuasiComplete => "quasi-complete",
            SeparationKind::Complete => "complete",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationDiagnosis {
    pub kind: SeparationKind,
    /// Unit-norm separating direction, present unless `kind` is `None`.
    pub direction: Option<Vec<f64>>,
    /// Number of observations strictly on their own side of `direction`.
    pub separated: f64,
    /// Total number of Bernoulli observations.
    pub observations: f64,
}

impl SeparationDiagnosis {
    fn none(observations: f64) -> Self {
        Self {
            kind: SeparationKind::None,
            direction: None,
            separated: 0.0,
            observations,
        }
    }

    /// Index of the largest-magnitude component of the direction.
    pub fn dominant_coefficient(&self) -> Option<usize> {
        let dir = self.direction.as_ref()?;
        (0..dir.len()).max_by(|&a, &b| dir[a].abs().total_cmp(&dir[b].abs()))
    }
}

/// Classifies `data` as not separated, quasi-completely or completely
/// separated by solving the linear program above with a dense simplex.
///
/// Counts need not be integers: a row contributes a success side when
/// `y_i > 0` and a failure side when `y_i < m_i`, weighted by the respective
/// counts.
pub fn detect_separation(data: &BinomialDataset) -> SeparationDiagnosis {
    let p = data.p();
    // (row, sign, weight)
    let mut sides: Vec<(usize, f64, f64)> = Vec::new();
    for i in 0..data.n() {
        let (y, m) = (data.y()[i], data.m()[i]);
        if y > 0.0 {
            sides.push((i, 1.0, y));
        }
        if m - y > 0.0 {
            sides.push((i, -1.0, m - y));
        }
    }
    let total: f64 = sides.iter().map(|s| s.2).sum();
    let k = sides.len();
    if k == 0 {
        return SeparationDiagnosis::none(total);
    }

    // columns: b+ (p), b- (p), s (k); rows: margin constraints then s <= 1
    let cols = 2 * p + k;
    let mut a = DMatrix::zeros(2 * k, cols);
    let mut rhs = vec![0.0; 2 * k];
    for (row, &(i, sign, _)) in sides.iter().enumerate() {
        for j in 0..p {
            let v = sign * data.x()[(i, j)];
            a[(row, j)] = -v;
            a[(row, p + j)] = v;
        }
        a[(row, 2 * p + row)] = 1.0;
        a[(k + row, 2 * p + row)] = 1.0;
        rhs[k + row] = 1.0;
    }
    let mut c = vec![0.0; cols];
    for (row, side) in sides.iter().enumerate() {
        c[2 * p + row] = side.2;
    }

    let max_pivots = 200 * (cols + 2 * k) + 1000;
    let x = match simplex::maximize(&c, &a, &rhs, max_pivots) {
        Ok(LpOutcome::Optimal { x, .. }) => x,
        // Bounded by construction; treat solver failure as "nothing found".
        _ => return SeparationDiagnosis::none(total),
    };

    let separated: f64 = sides
        .iter()
        .enumerate()
        .filter(|(row, _)| x[2 * p + row] > SATISFIED)
        .map(|(_, s)| s.2)
        .sum();
    if separated <= 0.0 {
        return SeparationDiagnosis::none(total);
    }
    let mut direction: Vec<f64> = (0..p).map(|j| x[j] - x[p + j]).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    direction.iter_mut().for_each(|v| *v /= norm);
    let kind = if separated >= total * (1.0 - 1e-12) {
        SeparationKind::Complete
    } else {
        SeparationKind::QuasiComplete
    };
    SeparationDiagnosis {
        kind,
        direction: Some(direction),
        separated,
        observations: total,
    }
}
