use serde::{Deserialize, Serialize};

use super::distributions::t_sf;
use crate::error::StatsError;

/// Alternative hypothesis of a test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    TwoSided,
    /// Alternative: first sample mean exceeds the second.
    Upper,
    /// Alternative: first sample mean is below the second.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub tail: Tail,
    /// Set when neither sample had any spread, so the statistic is undefined
    /// or infinite.
    #[serde(default)]
    pub degenerate: bool,
}

fn mean_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let ss = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

fn tail_p(statistic: f64, df: f64, tail: Tail) -> Result<f64, StatsError> {
    Ok(match tail {
        Tail::Upper => t_sf(statistic, df)?,
        Tail::Lower => t_sf(-statistic, df)?,
        Tail::TwoSided => (2.0 * t_sf(statistic.abs(), df)?).min(1.0),
    })
}

/// Two-sample t-test without the equal-variance assumption.
///
/// Degrees of freedom follow Welch–Satterthwaite. When both samples are
/// constant the result is flagged `degenerate`: equal means give p = 1,
/// unequal means give an infinite statistic and a limiting p of 0 or 1.
pub fn welch_t_test(
    sample_a: &[f64],
    sample_b: &[f64],
    tail: Tail,
) -> Result<TestResult, StatsError> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(StatsError::InvalidInput(format!(
            "welch_t_test needs at least 2 observations per sample (got {} and {})",
            sample_a.len(),
            sample_b.len()
        )));
    }
    if sample_a.iter().chain(sample_b).any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("samples contain non-finite values".into()));
    }
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let (mean_a, var_a) = mean_var(sample_a);
    let (mean_b, var_b) = mean_var(sample_b);
    let sa = var_a / na;
    let sb = var_b / nb;
    let se2 = sa + sb;
    let diff = mean_a - mean_b;

    if se2 <= 0.0 {
        let df = na + nb - 2.0;
        if diff == 0.0 {
            return Ok(TestResult { statistic: 0.0, df, p_value: 1.0, tail, degenerate: true });
        }
        let statistic = diff.signum() * f64::INFINITY;
        let p_value = tail_p(statistic, df, tail)?;
        return Ok(TestResult { statistic, df, p_value, tail, degenerate: true });
    }

    let statistic = diff / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p_value = tail_p(statistic, df, tail)?;
    Ok(TestResult { statistic, df, p_value, tail, degenerate: false })
}
