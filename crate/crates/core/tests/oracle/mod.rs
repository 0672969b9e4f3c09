//! Independent reference implementations used only by tests.
//!
//! Nothing here calls into the crate's statistical code: densities are
//! integrated numerically with their own log-gamma, logistic fits come from
//! closed-form log odds, and the gating hierarchy is transcribed rule by
//! rule.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Main-path value next to its oracle value.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub case_id: String,
    pub main: f64,
    pub oracle: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

impl OracleReport {
    pub fn new(case_id: impl Into<String>, main: f64, oracle: f64) -> Self {
        let abs_error = (main - oracle).abs();
        let rel_error = if oracle == 0.0 { abs_error } else { abs_error / oracle.abs() };
        Self { case_id: case_id.into(), main, oracle, abs_error, rel_error }
    }
}

#[derive(Debug)]
pub struct QuadratureError(pub String);

/// Log-gamma via the Stirling series after shifting the argument above 15.
fn stirling_ln_gamma(x: f64) -> f64 {
    let mut shift = 0.0;
    let mut z = x;
    while z < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series - shift
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadratureError> {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(QuadratureError(format!("no convergence on [{a}, {b}]")));
    }
    Ok(adaptive(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)?
        + adaptive(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)?)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`, split into unit pieces.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let pieces = ((b - a).abs().ceil() as usize).max(1);
    let width = (b - a) / pieces as f64;
    let mut total = 0.0;
    for i in 0..pieces {
        let lo = a + width * i as f64;
        let hi = lo + width;
        let (flo, fhi) = (f(lo), f(hi));
        let (whole, m, fm) = simpson(f, lo, flo, hi, fhi);
        total += adaptive(f, lo, flo, hi, fhi, whole, m, fm, tol / pieces as f64, 50)?;
    }
    Ok(total)
}

const TOL: f64 = 1e-10;

pub fn oracle_normal_cdf(z: f64) -> Result<f64, QuadratureError> {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    Ok(0.5 + integrate(&phi, 0.0, z, TOL)?)
}

/// Upper tail of Student's t by quadrature of the density from 0 to |x|.
pub fn oracle_t_sf(x: f64, df: f64) -> Result<f64, QuadratureError> {
    let log_norm = stirling_ln_gamma(0.5 * (df + 1.0)) - stirling_ln_gamma(0.5 * df) - 0.5 * (df * PI).ln();
    let density = move |t: f64| (log_norm - 0.5 * (df + 1.0) * (1.0 + t * t / df).ln()).exp();
    let mass = integrate(&density, 0.0, x.abs(), TOL)?;
    Ok(if x >= 0.0 { 0.5 - mass } else { 0.5 + mass })
}

/// Chi-square survival by quadrature after substituting t = u^2, which
/// removes the singularity at zero for one degree of freedom.
pub fn oracle_chi_square_sf(x: f64, df: u32) -> Result<f64, QuadratureError> {
    let k = f64::from(df);
    let log_norm = (2.0f64).ln() - 0.5 * k * (2.0f64).ln() - stirling_ln_gamma(0.5 * k);
    let integrand = move |u: f64| {
        if u == 0.0 {
            return if df == 1 { log_norm.exp() } else { 0.0 };
        }
        (log_norm + (k - 1.0) * u.ln() - 0.5 * u * u).exp()
    };
    Ok(1.0 - integrate(&integrand, 0.0, x.sqrt(), TOL)?)
}

/// Closed-form logistic coefficients for a 2x2 table: (a, b) are events and
/// non-events with the covariate set, (c, d) without. Declines zero cells.
pub fn oracle_logistic_2x2(a: u32, b: u32, c: u32, d: u32) -> Option<(f64, f64)> {
    if a == 0 || b == 0 || c == 0 || d == 0 {
        return None;
    }
    let (a, b, c, d) = (f64::from(a), f64::from(b), f64::from(c), f64::from(d));
    Some(((c / d).ln(), (a * d / (b * c)).ln()))
}

/// Rejections of H01..H07 at `alpha`, written out directly from the
/// gating rules.
pub fn oracle_gatekeeping_enumerate(p: [f64; 7], alpha: f64) -> [bool; 7] {
    let sig = |i: usize| p[i] < alpha;
    let h01 = sig(0);
    // pairwise hypotheses are tested once H01 is rejected
    let h02 = h01 && sig(1);
    let h03 = h01 && sig(2);
    let h04 = h01 && sig(3);
    // H05 (beta1) needs H01, H02, H03
    let h05 = h01 && h02 && h03 && sig(4);
    // H06 (beta2) needs H01, H02, H04
    let h06 = h01 && h02 && h04 && sig(5);
    // H07 (beta3) needs H01, H03, H04
    let h07 = h01 && h03 && h04 && sig(6);
    [h01, h02, h03, h04, h05, h06, h07]
}
