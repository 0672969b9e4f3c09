//! Logistic regression by iteratively reweighted least squares.
//!
//! Designs here are binary indicator matrices, so rows are collapsed into
//! covariate patterns with trial/event counts before fitting. The binomial
//! fit on the collapsed data has the same coefficients and the same Bernoulli
//! log-likelihood as the row-level fit.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::distributions::chi_square_sf;
use super::ttest::{Tail, TestResult};
use crate::error::StatsError;

pub const IRLS_TOLERANCE: f64 = 1e-10;
pub const IRLS_MAX_ITER: usize = 50;

/// |beta| beyond this on a non-converged fit is reported as divergence.
const DIVERGENCE_THRESHOLD: f64 = 15.0;
/// Relative pivot size below which a column counts as collinear.
const COLLINEAR_TOLERANCE: f64 = 1e-10;

/// Row-major `n x k` design matrix whose first column is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl Design {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, StatsError> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        if n_cols == 0 {
            return Err(StatsError::InvalidInput("design has no columns".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(StatsError::InvalidInput(format!(
                    "design row {i} has {} columns, expected {n_cols}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { n_rows: rows.len(), n_cols, values })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }
}

/// Binomial data on distinct covariate patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedData {
    n_cols: usize,
    patterns: Vec<Vec<f64>>,
    trials: Vec<f64>,
    events: Vec<f64>,
}

impl GroupedData {
    /// Collapses a row-level design and 0/1 outcome into covariate patterns.
    pub fn from_rows(design: &Design, outcome: &[u8]) -> Result<Self, StatsError> {
        if outcome.len() != design.n_rows() {
            return Err(StatsError::InvalidInput(format!(
                "outcome length {} does not match design rows {}",
                outcome.len(),
                design.n_rows()
            )));
        }
        let mut cells: BTreeMap<Vec<u64>, (Vec<f64>, f64, f64)> = BTreeMap::new();
        for (i, &y) in outcome.iter().enumerate() {
            if y > 1 {
                return Err(StatsError::InvalidInput(format!("outcome {i} is {y}, expected 0 or 1")));
            }
            let row = design.row(i);
            if row.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::InvalidInput(format!("design row {i} is not finite")));
            }
            let key = row.iter().map(|v| v.to_bits()).collect();
            let cell = cells.entry(key).or_insert_with(|| (row.to_vec(), 0.0, 0.0));
            cell.1 += 1.0;
            cell.2 += f64::from(y);
        }
        let mut data = Self {
            n_cols: design.n_cols(),
            patterns: Vec::with_capacity(cells.len()),
            trials: Vec::with_capacity(cells.len()),
            events: Vec::with_capacity(cells.len()),
        };
        for (_, (pattern, m, y)) in cells {
            data.patterns.push(pattern);
            data.trials.push(m);
            data.events.push(y);
        }
        Ok(data)
    }

    /// Builds grouped data directly from patterns with counts.
    pub fn from_counts(patterns: Vec<Vec<f64>>, trials: Vec<f64>, events: Vec<f64>) -> Result<Self, StatsError> {
        let n_cols = patterns.first().map_or(0, Vec::len);
        if n_cols == 0 || patterns.len() != trials.len() || trials.len() != events.len() {
            return Err(StatsError::InvalidInput("inconsistent grouped data".into()));
        }
        if patterns.iter().any(|p| p.len() != n_cols) {
            return Err(StatsError::InvalidInput("ragged covariate patterns".into()));
        }
        if trials.iter().zip(&events).any(|(m, y)| !(*y >= 0.0 && y <= m)) {
            return Err(StatsError::InvalidInput("event count outside [0, trials]".into()));
        }
        Ok(Self { n_cols, patterns, trials, events })
    }

    /// Keeps only the listed columns (in the given order).
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        Self {
            n_cols: columns.len(),
            patterns: self
                .patterns
                .iter()
                .map(|p| columns.iter().map(|&c| p[c]).collect())
                .collect(),
            trials: self.trials.clone(),
            events: self.events.clone(),
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_observations(&self) -> f64 {
        self.trials.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub n_iterations: usize,
    /// Inverse of the observed information at the final coefficients.
    pub covariance: DMatrix<f64>,
    /// Max absolute component of the score at the final coefficients.
    pub max_abs_gradient: f64,
    /// Coefficients ran off towards infinity (separation).
    pub diverging: bool,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct Evaluation {
    log_likelihood: f64,
    gradient: DVector<f64>,
    information: DMatrix<f64>,
}

fn evaluate(data: &GroupedData, beta: &DVector<f64>) -> Evaluation {
    let k = data.n_cols;
    let mut log_likelihood = 0.0;
    let mut gradient = DVector::zeros(k);
    let mut information = DMatrix::zeros(k, k);
    for ((x, &m), &y) in data.patterns.iter().zip(&data.trials).zip(&data.events) {
        let eta: f64 = x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
        let p = sigmoid(eta);
        log_likelihood -= y * softplus(-eta) + (m - y) * softplus(eta);
        let w = m * p * (1.0 - p);
        let resid = y - m * p;
        for i in 0..k {
            gradient[i] += x[i] * resid;
            for j in 0..=i {
                information[(i, j)] += w * x[i] * x[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            information[(j, i)] = information[(i, j)];
        }
    }
    Evaluation { log_likelihood, gradient, information }
}

/// Returns the first column that is (numerically) a linear combination of
/// earlier columns, using a pivoted Gram–Schmidt on the weighted cross-product.
fn first_collinear_column(data: &GroupedData) -> Option<usize> {
    let k = data.n_cols;
    let mut xtx = DMatrix::<f64>::zeros(k, k);
    for (x, &m) in data.patterns.iter().zip(&data.trials) {
        for i in 0..k {
            for j in 0..k {
                xtx[(i, j)] += m * x[i] * x[j];
            }
        }
    }
    // Cholesky one column at a time; a vanishing pivot marks collinearity.
    let mut l = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        let diag = xtx[(j, j)];
        let mut pivot = diag;
        for c in 0..j {
            pivot -= l[(j, c)] * l[(j, c)];
        }
        if pivot.is_nan() || pivot <= COLLINEAR_TOLERANCE * diag.max(1.0) {
            return Some(j);
        }
        let root = pivot.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..k {
            let mut v = xtx[(i, j)];
            for c in 0..j {
                v -= l[(i, c)] * l[(j, c)];
            }
            l[(i, j)] = v / root;
        }
    }
    None
}

/// Maximum-likelihood logistic fit on collapsed binomial data.
pub fn fit_grouped(data: &GroupedData) -> Result<LogisticFit, StatsError> {
    if data.n_observations() < data.n_cols as f64 {
        return Err(StatsError::InvalidInput(format!(
            "{} observations cannot identify {} coefficients",
            data.n_observations(),
            data.n_cols
        )));
    }
    if let Some(column) = first_collinear_column(data) {
        return Err(StatsError::Collinear { column });
    }

    let k = data.n_cols;
    let mut beta = DVector::<f64>::zeros(k);
    let mut converged = false;
    let mut n_iterations = 0;
    let mut eval = evaluate(data, &beta);
    while n_iterations < IRLS_MAX_ITER {
        n_iterations += 1;
        let Some(chol) = eval.information.clone().cholesky() else {
            break;
        };
        let step = chol.solve(&eval.gradient);
        beta += &step;
        eval = evaluate(data, &beta);
        if !eval.log_likelihood.is_finite() {
            break;
        }
        if step.amax() < IRLS_TOLERANCE {
            converged = true;
            break;
        }
    }

    let covariance = eval
        .information
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .unwrap_or_else(|| DMatrix::from_element(k, k, f64::NAN));
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let diverging = !converged
        && coefficients.iter().any(|b| !b.is_finite() || b.abs() > DIVERGENCE_THRESHOLD);
    Ok(LogisticFit {
        log_likelihood: eval.log_likelihood,
        max_abs_gradient: eval.gradient.amax(),
        coefficients,
        converged,
        n_iterations,
        covariance,
        diverging,
    })
}

/// Fits `logit P(y = 1) = X beta` on row-level data.
pub fn fit_logistic(design: &Design, outcome: &[u8]) -> Result<LogisticFit, StatsError> {
    if design.n_rows() < design.n_cols() {
        return Err(StatsError::InvalidInput(format!(
            "n = {} is smaller than k = {}",
            design.n_rows(),
            design.n_cols()
        )));
    }
    fit_grouped(&GroupedData::from_rows(design, outcome)?)
}

/// Likelihood-ratio chi-square test of a reduced model nested in `full`.
pub fn lr_test(full: &LogisticFit, reduced: &LogisticFit, df_diff: u32) -> Result<TestResult, StatsError> {
    if df_diff == 0 {
        return Err(StatsError::InvalidInput("df_diff must be positive".into()));
    }
    let diff = full.log_likelihood - reduced.log_likelihood;
    let tolerance = 1e-6 + 1e-9 * reduced.log_likelihood.abs();
    if !diff.is_finite() || diff < -tolerance {
        return Err(StatsError::FittingFailure(format!(
            "full log-likelihood {} is below reduced {}",
            full.log_likelihood, reduced.log_likelihood
        )));
    }
    let statistic = (2.0 * diff).max(0.0);
    Ok(TestResult {
        statistic,
        df: f64::from(df_diff),
        p_value: chi_square_sf(statistic, df_diff)?,
        tail: Tail::Upper,
        degenerate: false,
    })
}
