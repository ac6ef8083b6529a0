//! CSV ingestion: header row required, comma separated, decimal point only.

use std::collections::HashSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dylogit::BinomialDataset;
use nalgebra::{DMatrix, DVector};

pub const INTERCEPT_NAME: &str = "(Intercept)";

/// Which CSV columns play which role.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub response: String,
    /// Trials per row; every row is a single trial when absent.
    pub trials: Option<String>,
    /// Covariates in design order; empty means every remaining column.
    pub covariates: Vec<String>,
    pub intercept: bool,
}

/// Parsed numeric table.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    /// File line of each record, for error messages.
    pub lines: Vec<u64>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        Self::from_reader(file).with_context(|| format!("cannot read {}", path.display()))
    }

    pub fn from_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            bail!("missing header row");
        }
        let mut seen = HashSet::new();
        for h in &headers {
            if !seen.insert(h) {
                bail!("duplicate column '{h}' in header");
            }
        }
        let mut columns = vec![Vec::new(); headers.len()];
        let mut lines = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            for (k, field) in record.iter().enumerate() {
                columns[k].push(parse_number(field).with_context(|| {
                    format!("line {line}, column '{}'", headers[k])
                })?);
            }
            lines.push(line);
        }
        if lines.is_empty() {
            bail!("no data rows");
        }
        Ok(Self {
            headers,
            columns,
            lines,
        })
    }

    fn column(&self, name: &str) -> Result<&[f64]> {
        let k = self
            .headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("column '{name}' not found; available: {}", self.headers.join(", ")))?;
        Ok(&self.columns[k])
    }

    /// Builds the binomial dataset described by `schema`.
    pub fn dataset(&self, schema: &CsvSchema) -> Result<BinomialDataset> {
        let covariates = self.covariate_names(schema)?;
        let y = self.column(&schema.response)?;
        let m: Vec<f64> = match &schema.trials {
            Some(name) => self.column(name)?.to_vec(),
            None => vec![1.0; y.len()],
        };
        for (i, &line) in self.lines.iter().enumerate() {
            if !(m[i] > 0.0) {
                bail!("line {line}: trials must be positive, got {}", m[i]);
            }
            if y[i] < 0.0 || y[i] > m[i] {
                bail!("line {line}: response {} outside [0, {}]", y[i], m[i]);
            }
        }

        let n = y.len();
        let mut names = Vec::new();
        let mut cols: Vec<&[f64]> = Vec::new();
        let ones = vec![1.0; n];
        if schema.intercept {
            names.push(INTERCEPT_NAME.to_string());
            cols.push(&ones);
        }
        for name in &covariates {
            names.push(name.clone());
            cols.push(self.column(name)?);
        }
        if cols.is_empty() {
            bail!("the design has no columns: give covariates or keep the intercept");
        }
        let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        Ok(BinomialDataset::new(x, DVector::from_column_slice(y), DVector::from_vec(m))?
            .with_column_names(names)?)
    }

    fn covariate_names(&self, schema: &CsvSchema) -> Result<Vec<String>> {
        let reserved: Vec<&str> = std::iter::once(schema.response.as_str())
            .chain(schema.trials.as_deref())
            .collect();
        if schema.trials.as_deref() == Some(schema.response.as_str()) {
            bail!("response and trials must be different columns");
        }
        for name in &reserved {
            self.column(name)?;
        }
        if schema.covariates.is_empty() {
            return Ok(self
                .headers
                .iter()
                .filter(|h| !reserved.contains(&h.as_str()))
                .cloned()
                .collect());
        }
        let mut seen = HashSet::new();
        for name in &schema.covariates {
            if reserved.contains(&name.as_str()) {
                bail!("column '{name}' cannot be both a covariate and the response or trials");
            }
            if !seen.insert(name) {
                bail!("covariate '{name}' listed twice");
            }
            self.column(name)?;
        }
        Ok(schema.covariates.clone())
    }
}

/// Parses a finite decimal number; NaN and infinities are rejected.
pub fn parse_number(field: &str) -> Result<f64> {
    if field.is_empty() {
        bail!("empty field");
    }
    let value: f64 = field
        .parse()
        .map_err(|_| anyhow::anyhow!("'{field}' is not a number"))?;
    if !value.is_finite() {
        bail!("'{field}' is not a finite number");
    }
    Ok(value)
}

/// Centers and scales every non-constant column to unit sample variance.
pub fn standardize(data: &BinomialDataset) -> Result<BinomialDataset> {
    let mut x = data.x().clone();
    let n = x.nrows();
    if n < 2 {
        bail!("standardizing needs at least two rows");
    }
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        if sd > 0.0 {
            col.apply(|v| *v = (*v - mean) / sd);
        }
    }
    Ok(data.with_design(x)?)
}
