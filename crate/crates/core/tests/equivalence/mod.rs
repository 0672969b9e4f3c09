//! Main-path versus oracle comparisons shared by the equivalence and
//! acceptance test targets.

#![allow(dead_code)]

use fastsim_core::final_analysis::gate_both_retained;
use fastsim_core::stats::{chi_square_sf, fit_logistic, normal_cdf, t_sf, Design};
use fastsim_core::HypothesisId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::{self, OracleReport};

pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;
pub const LOGISTIC_TOLERANCE: f64 = 1e-6;

const T_DFS: [f64; 10] = [1.0, 2.0, 3.0, 4.5, 8.0, 12.0, 20.0, 37.3, 60.0, 120.0];
const T_XS: [f64; 5] = [-4.2, -1.1, 0.35, 1.96, 5.5];

/// 50 (x, df) points for the t distribution.
pub fn t_grid() -> Vec<(f64, f64)> {
    T_DFS.iter().flat_map(|&df| T_XS.iter().map(move |&x| (x, df))).collect()
}

/// 50 (x, df) points for the chi-square distribution.
pub fn chi_square_grid() -> Vec<(f64, u32)> {
    let xs = [0.05, 0.7, 2.5, 6.0, 13.0];
    (1..=10u32).flat_map(|df| xs.iter().map(move |&x| (x, df))).collect()
}

/// 50 equally spaced z values on [-6, 6].
pub fn normal_grid() -> Vec<f64> {
    (0..50).map(|i| -6.0 + 12.0 * f64::from(i) / 49.0).collect()
}

pub fn t_reports() -> Vec<OracleReport> {
    t_grid()
        .into_iter()
        .map(|(x, df)| {
            let main = t_sf(x, df).expect("t_sf");
            let reference = oracle::oracle_t_sf(x, df).expect("t quadrature");
            OracleReport::new(format!("t_sf({x}, {df})"), main, reference)
        })
        .collect()
}

pub fn chi_square_reports() -> Vec<OracleReport> {
    chi_square_grid()
        .into_iter()
        .map(|(x, df)| {
            let main = chi_square_sf(x, df).expect("chi_square_sf");
            let reference = oracle::oracle_chi_square_sf(x, df).expect("chi-square quadrature");
            OracleReport::new(format!("chi_square_sf({x}, {df})"), main, reference)
        })
        .collect()
}

pub fn normal_reports() -> Vec<OracleReport> {
    normal_grid()
        .into_iter()
        .map(|z| {
            let main = normal_cdf(z).expect("normal_cdf");
            let reference = oracle::oracle_normal_cdf(z).expect("normal quadrature");
            OracleReport::new(format!("normal_cdf({z:.4})"), main, reference)
        })
        .collect()
}

/// Row-level design and outcome for a 2x2 table laid out as in
/// [`oracle::oracle_logistic_2x2`].
pub fn table_rows(a: u32, b: u32, c: u32, d: u32) -> (Design, Vec<u8>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (x, events, non_events) in [(1.0, a, b), (0.0, c, d)] {
        for _ in 0..events {
            rows.push([1.0, x]);
            y.push(1);
        }
        for _ in 0..non_events {
            rows.push([1.0, x]);
            y.push(0);
        }
    }
    (Design::from_rows(&rows).expect("design"), y)
}

/// Both coefficients of `count` random tables, each compared with the
/// closed-form log odds.
pub fn logistic_reports(count: usize, seed: u64) -> Vec<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for case in 0..count {
        let cells: [u32; 4] = std::array::from_fn(|_| rng.random_range(1..=150));
        let [a, b, c, d] = cells;
        let (beta0, beta1) = oracle::oracle_logistic_2x2(a, b, c, d).expect("no zero cells");
        let (design, y) = table_rows(a, b, c, d);
        let fit = fit_logistic(&design, &y).expect("fit");
        assert!(fit.converged, "table {cells:?} did not converge");
        out.push(OracleReport::new(format!("table {case} {cells:?} beta0"), fit.coefficients[0], beta0));
        out.push(OracleReport::new(format!("table {case} {cells:?} beta1"), fit.coefficients[1], beta1));
    }
    out
}

/// A p-vector mixing small and large values so every gate gets exercised.
pub fn random_p_vector(rng: &mut ChaCha8Rng) -> [f64; 7] {
    std::array::from_fn(|_| {
        if rng.random_bool(0.6) {
            rng.random_range(0.0..0.1)
        } else {
            rng.random_range(0.0..1.0)
        }
    })
}

/// Number of random p-vectors on which the main gating and the enumerator
/// disagree.
pub fn gating_mismatches(count: usize, seed: u64, alpha: f64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .filter(|_| {
            let p = random_p_vector(&mut rng);
            let main = gate_both_retained(&p, alpha);
            let reference = oracle::oracle_gatekeeping_enumerate(p, alpha);
            HypothesisId::BOTH_RETAINED
                .iter()
                .zip(reference)
                .any(|(h, r)| main.contains(h) != r)
        })
        .count()
}

pub fn max_abs_error(reports: &[OracleReport]) -> f64 {
    reports.iter().map(|r| r.abs_error).fold(0.0, f64::max)
}
