//! Dense tableau simplex for `maximize c'x  s.t.  A x <= b, x >= 0` with
//! `b >= 0`, so the slack basis is feasible and no phase one is needed.
//! Pivoting follows Bland's rule, which rules out cycling on the heavily
//! degenerate programs produced by separation checks.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows + 1` rows (objective last) of `cols + 1` entries (rhs last).
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let inv = 1.0 / self.at(r, c);
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let factor = self.data[i * w + c];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (v, &p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }
}

/// Solves the program, giving up after `max_pivots` pivots.
pub fn maximize(c: &[f64], a: &DMatrix<f64>, b: &[f64], max_pivots: usize) -> Result<LpOutcome> {
    let (m, n) = a.shape();
    crate::error::check_len("objective", n, c.len())?;
    crate::error::check_len("right-hand side", m, b.len())?;
    if b.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidConfig(
            "simplex requires a finite non-negative right-hand side".into(),
        ));
    }
    let cols = n + m;
    let w = cols + 1;
    let mut data = vec![0.0; (m + 1) * w];
    for i in 0..m {
        for j in 0..n {
            data[i * w + j] = a[(i, j)];
        }
        data[i * w + n + i] = 1.0;
        data[i * w + cols] = b[i];
    }
    for j in 0..n {
        data[m * w + j] = -c[j];
    }
    let mut t = Tableau {
        rows: m,
        cols,
        data,
        basis: (n..n + m).collect(),
    };

    let mut pivots = 0;
    loop {
        let Some(enter) = (0..cols).find(|&j| t.at(m, j) < -EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = t.at(i, enter);
            if coef > EPS {
                let ratio = t.at(i, cols) / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - EPS
                            || (ratio <= best + EPS && t.basis[i] < t.basis[r])
                        {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return Ok(LpOutcome::Unbounded);
        };
        t.pivot(r, enter);
        pivots += 1;
        if pivots >= max_pivots {
            return Err(Error::NotConverged {
                iterations: pivots,
                grad_norm: f64::NAN,
            });
        }
    }

    let mut x = vec![0.0; n];
    for (i, &j) in t.basis.iter().enumerate() {
        if j < n {
            x[j] = t.at(i, cols);
        }
    }
    Ok(LpOutcome::Optimal {
        x,
        value: t.at(m, cols),
    })
}
