//! Distribution functions for the test statistics used by the design.
//!
//! Everything is expressed through the regularized incomplete gamma and beta
//! functions, evaluated with power series and Lentz continued fractions.

use crate::error::StatsError;

const EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
fn incomplete_gamma(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        let p = (sum.ln() + log_prefactor).exp().min(1.0);
        (p, 1.0 - p)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        let q = (h.ln() + log_prefactor).exp().min(1.0);
        (1.0 - q, q)
    }
}

/// Continued fraction for the incomplete beta function.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let log_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        (log_front.exp() * beta_cf(a, b, x) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - log_front.exp() * beta_cf(b, a, 1.0 - x) / b).clamp(0.0, 1.0)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> Result<f64, StatsError> {
    if !z.is_finite() {
        return Err(StatsError::InvalidInput(format!("normal_cdf argument {z} is not finite")));
    }
    let (_, q) = incomplete_gamma(0.5, 0.5 * z * z);
    // 0.5 * Q(1/2, z^2/2) is the tail mass beyond |z|
    let tail = 0.5 * q;
    Ok(if z >= 0.0 { 1.0 - tail } else { tail })
}

/// Upper-tail survival function of Student's t with `df` degrees of freedom.
pub fn t_sf(x: f64, df: f64) -> Result<f64, StatsError> {
    if !df.is_finite() || df <= 0.0 {
        return Err(StatsError::InvalidInput(format!("t_sf requires df > 0, got {df}")));
    }
    if x.is_nan() {
        return Err(StatsError::InvalidInput("t_sf argument is NaN".into()));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    let tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + x * x));
    Ok(if x >= 0.0 { tail } else { 1.0 - tail })
}

/// Survival function of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: u32) -> Result<f64, StatsError> {
    if df == 0 {
        return Err(StatsError::InvalidInput("chi_square_sf requires df >= 1".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(StatsError::InvalidInput(format!("chi_square_sf requires x >= 0, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(incomplete_gamma(0.5 * f64::from(df), 0.5 * x).1)
}
