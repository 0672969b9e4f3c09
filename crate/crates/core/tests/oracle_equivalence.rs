mod equivalence;
mod oracle;

use equivalence::*;
use fastsim_core::final_analysis::gate_both_retained;
use fastsim_core::stats::{fit_logistic, lr_test, t_sf, Design};
use proptest::prelude::*;

fn assert_close(reports: &[oracle::OracleReport], tol: f64) {
    for r in reports {
        assert!(r.abs_error < tol, "{}: main {} oracle {} (abs error {:e})", r.case_id, r.main, r.oracle, r.abs_error);
    }
}

#[test]
fn t_sf_matches_quadrature() {
    let reports = t_reports();
    assert_eq!(reports.len(), 50);
    assert_close(&reports, DISTRIBUTION_TOLERANCE);
}

#[test]
fn chi_square_sf_matches_quadrature() {
    let reports = chi_square_reports();
    assert_eq!(reports.len(), 50);
    assert_close(&reports, DISTRIBUTION_TOLERANCE);
}

#[test]
fn normal_cdf_matches_quadrature() {
    let reports = normal_reports();
    assert_eq!(reports.len(), 50);
    assert_close(&reports, DISTRIBUTION_TOLERANCE);
}

#[test]
fn cauchy_tail_has_closed_form() {
    // one degree of freedom is the Cauchy distribution: P(T > 1) = 1/4
    assert!((t_sf(1.0, 1.0).unwrap() - 0.25).abs() < 1e-12);
    assert!((oracle::oracle_t_sf(1.0, 1.0).unwrap() - 0.25).abs() < 1e-9);
}

#[test]
fn oracle_reference_points() {
    assert!((oracle::oracle_normal_cdf(1.959964).unwrap() - 0.975).abs() < 1e-6);
    assert!((oracle::oracle_chi_square_sf(3.841, 1).unwrap() - 0.05).abs() < 5e-4);
    assert!((oracle::oracle_chi_square_sf(5.991, 2).unwrap() - 0.05).abs() < 5e-4);
    // two degrees of freedom: exp(-x/2)
    assert!((oracle::oracle_chi_square_sf(6.0, 2).unwrap() - (-3.0f64).exp()).abs() < 1e-9);
}

#[test]
fn logistic_matches_closed_form_tables() {
    let reports = logistic_reports(25, 0x2b2);
    assert_eq!(reports.len(), 50);
    assert_close(&reports, LOGISTIC_TOLERANCE);
}

#[test]
fn logistic_fixed_table() {
    let (beta0, beta1) = oracle::oracle_logistic_2x2(30, 70, 20, 80).unwrap();
    let (design, y) = table_rows(30, 70, 20, 80);
    let fit = fit_logistic(&design, &y).unwrap();
    assert!((fit.coefficients[0] - beta0).abs() < 1e-8);
    assert!((fit.coefficients[1] - beta1).abs() < 1e-8);
    assert!((beta0 - (0.25f64).ln()).abs() < 1e-12);
}

#[test]
fn oracle_declines_zero_cells() {
    assert!(oracle::oracle_logistic_2x2(0, 10, 5, 5).is_none());
    assert!(oracle::oracle_logistic_2x2(10, 10, 5, 0).is_none());
}

#[test]
fn gating_matches_enumerator() {
    assert_eq!(gating_mismatches(1000, 0x6a7e, 0.05), 0);
}

#[test]
fn gating_extremes() {
    assert_eq!(gate_both_retained(&[0.0; 7], 0.05).len(), 7);
    assert!(gate_both_retained(&[1.0; 7], 0.05).is_empty());
    assert_eq!(oracle::oracle_gatekeeping_enumerate([0.0; 7], 0.05), [true; 7]);
    assert_eq!(oracle::oracle_gatekeeping_enumerate([1.0; 7], 0.05), [false; 7]);
}

fn binary_rows() -> impl Strategy<Value = (Vec<[f64; 3]>, Vec<u8>)> {
    prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>()), 20..80).prop_map(|v| {
        let rows = v.iter().map(|&(x1, x2, _)| [1.0, f64::from(u8::from(x1)), f64::from(u8::from(x2))]).collect();
        let y = v.iter().map(|&(_, _, y)| u8::from(y)).collect();
        (rows, y)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lr_test_ignores_row_order((rows, y) in binary_rows(), rotate in 0usize..80) {
        let fits = |rows: &[[f64; 3]], y: &[u8]| {
            let full = fit_logistic(&Design::from_rows(rows).unwrap(), y);
            let reduced_rows: Vec<[f64; 2]> = rows.iter().map(|r| [r[0], r[1]]).collect();
            let reduced = fit_logistic(&Design::from_rows(&reduced_rows).unwrap(), y);
            (full, reduced)
        };
        let (full, reduced) = fits(&rows, &y);
        prop_assume!(full.is_ok() && reduced.is_ok());
        let (full, reduced) = (full.unwrap(), reduced.unwrap());
        prop_assume!(full.converged && reduced.converged);
        let base = lr_test(&full, &reduced, 1).unwrap();

        let k = rotate % rows.len();
        let mut rows2 = rows.clone();
        let mut y2 = y.clone();
        rows2.rotate_left(k);
        y2.rotate_left(k);
        rows2.reverse();
        y2.reverse();
        let (full2, reduced2) = fits(&rows2, &y2);
        let moved = lr_test(&full2.unwrap(), &reduced2.unwrap(), 1).unwrap();
        prop_assert!((base.p_value - moved.p_value).abs() < 1e-9);
        prop_assert!(base.statistic >= 0.0);
    }

    #[test]
    fn one_column_two_by_two_agrees_with_oracle(a in 1u32..60, b in 1u32..60, c in 1u32..60, d in 1u32..60) {
        let (beta0, beta1) = oracle::oracle_logistic_2x2(a, b, c, d).unwrap();
        let (design, y) = table_rows(a, b, c, d);
        let fit = fit_logistic(&design, &y).unwrap();
        prop_assert!((fit.coefficients[0] - beta0).abs() < 1e-6);
        prop_assert!((fit.coefficients[1] - beta1).abs() < 1e-6);
    }
}
