//! Phase II interim analyses: arm dropping and feasibility.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{ArmA, BenefitDirections, Direction, SubjectRecord};
use crate::stats::{welch_t_test, Tail, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    ArmDropping,
    Feasibility,
}

impl AnalysisKind {
    pub fn short_name(self) -> &'static str {
        match self {
            AnalysisKind::ArmDropping => "drop",
            AnalysisKind::Feasibility => "feas",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledAnalysis {
    pub kind: AnalysisKind,
    pub trigger: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisSchedule {
    pub first: ScheduledAnalysis,
    pub second: ScheduledAnalysis,
}

/// Orders the two analyses by trigger; on a tie arm dropping goes first.
pub fn build_schedule(n_drop: u32, n_feas: u32) -> AnalysisSchedule {
    let drop = ScheduledAnalysis { kind: AnalysisKind::ArmDropping, trigger: n_drop };
    let feas = ScheduledAnalysis { kind: AnalysisKind::Feasibility, trigger: n_feas };
    if n_drop <= n_feas {
        AnalysisSchedule { first: drop, second: feas }
    } else {
        AnalysisSchedule { first: feas, second: drop }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionDecision {
    /// Retained treatment arms, in arm order.
    pub retained: Vec<ArmA>,
    pub test_y11: TestResult,
    pub test_y12: TestResult,
    pub nominated_by_y11: Option<ArmA>,
    pub nominated_by_y12: Option<ArmA>,
    pub used_default: bool,
}

impl RetentionDecision {
    pub fn retains_both(&self) -> bool {
        self.retained.len() == 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityDecision {
    pub proceed: bool,
    pub test: TestResult,
    pub pooled_mean: f64,
    pub control_mean: f64,
}

/// Settings shared by the arm-dropping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroppingRule {
    pub alpha: f64,
    pub benefit: BenefitDirections,
    pub default_arm: ArmA,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn nominate(test: &TestResult, alpha: f64, direction: Direction, mean_a1: f64, mean_a2: f64) -> Option<ArmA> {
    if test.p_value >= alpha {
        return None;
    }
    if direction.favors(mean_a1, mean_a2) {
        Some(ArmA::A1)
    } else if direction.favors(mean_a2, mean_a1) {
        Some(ArmA::A2)
    } else {
        None
    }
}

/// The retention rule on its own: each significant biomarker nominates the
/// arm that is better in its benefit direction; the retained set is the
/// union of nominations, or the default arm when there are none.
pub fn apply_retention_rule(
    rule: &DroppingRule,
    test_y11: TestResult,
    test_y12: TestResult,
    means_y11: (f64, f64),
    means_y12: (f64, f64),
) -> RetentionDecision {
    let nominated_by_y11 = nominate(&test_y11, rule.alpha, rule.benefit.y11, means_y11.0, means_y11.1);
    let nominated_by_y12 = nominate(&test_y12, rule.alpha, rule.benefit.y12, means_y12.0, means_y12.1);
    let mut retained: Vec<ArmA> = [ArmA::A1, ArmA::A2]
        .into_iter()
        .filter(|arm| nominated_by_y11 == Some(*arm) || nominated_by_y12 == Some(*arm))
        .collect();
    let used_default = retained.is_empty();
    if used_default {
        retained.push(rule.default_arm);
    }
    RetentionDecision { retained, test_y11, test_y12, nominated_by_y11, nominated_by_y12, used_default }
}

/// Compares A1 against A2 on each biomarker with two-sided Welch tests.
pub fn arm_dropping_analysis(subjects: &[SubjectRecord], rule: &DroppingRule) -> Result<RetentionDecision, SimError> {
    let collect = |arm: ArmA| -> (Vec<f64>, Vec<f64>) {
        subjects.iter().filter(|s| s.arm_a == Some(arm)).map(|s| (s.y11, s.y12)).unzip()
    };
    let (a1_y11, a1_y12) = collect(ArmA::A1);
    let (a2_y11, a2_y12) = collect(ArmA::A2);
    if a1_y11.len() < 2 || a2_y11.len() < 2 {
        return Err(SimError::Scheduling(format!(
            "arm dropping needs at least 2 subjects in A1 and A2 (have {} and {})",
            a1_y11.len(),
            a2_y11.len()
        )));
    }
    let test_y11 = welch_t_test(&a1_y11, &a2_y11, Tail::TwoSided)?;
    let test_y12 = welch_t_test(&a1_y12, &a2_y12, Tail::TwoSided)?;
    Ok(apply_retention_rule(
        rule,
        test_y11,
        test_y12,
        (mean(&a1_y11), mean(&a2_y11)),
        (mean(&a1_y12), mean(&a2_y12)),
    ))
}

/// One-sided Welch test of control against every subject ever randomized
/// to A1 or A2, on Y11.
pub fn feasibility_analysis(
    subjects: &[SubjectRecord],
    alpha_feas: f64,
    direction: Direction,
) -> Result<FeasibilityDecision, SimError> {
    let mut control = Vec::new();
    let mut pooled = Vec::new();
    for s in subjects {
        match s.arm_a {
            Some(ArmA::A0) => control.push(s.y11),
            Some(ArmA::A1 | ArmA::A2) => pooled.push(s.y11),
            None => {}
        }
    }
    if control.len() < 2 || pooled.len() < 2 {
        return Err(SimError::Scheduling(format!(
            "feasibility needs at least 2 control and 2 treated subjects (have {} and {})",
            control.len(),
            pooled.len()
        )));
    }
    let tail = match direction {
        Direction::Increase => Tail::Upper,
        Direction::Decrease => Tail::Lower,
    };
    let test = welch_t_test(&pooled, &control, tail)?;
    Ok(FeasibilityDecision {
        proceed: test.p_value < alpha_feas,
        test,
        pooled_mean: mean(&pooled),
        control_mean: mean(&control),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArmB;
    use proptest::prelude::*;

    fn subject(index: u32, arm: ArmA, y11: f64, y12: f64) -> SubjectRecord {
        SubjectRecord { index, arm_a: Some(arm), arm_b: ArmB::B0, y11, y12, y21: 0 }
    }

    fn rule() -> DroppingRule {
        DroppingRule { alpha: 0.05, benefit: BenefitDirections::default(), default_arm: ArmA::A2 }
    }

    /// Deterministic spread values with mean 0 and sd of about 1.
    fn noise(i: usize) -> f64 {
        [-1.2, -0.4, 0.0, 0.5, 1.1, -0.7, 0.7][i % 7]
    }

    fn cohort(n: usize, arm: ArmA, y11: f64, y12: f64, start: u32) -> Vec<SubjectRecord> {
        (0..n)
            .map(|i| subject(start + i as u32, arm, y11 + noise(i), y12 + noise(i + 3)))
            .collect()
    }

    #[test]
    fn schedule_ordering() {
        let s = build_schedule(150, 300);
        assert_eq!((s.first.kind, s.first.trigger), (AnalysisKind::ArmDropping, 150));
        assert_eq!((s.second.kind, s.second.trigger), (AnalysisKind::Feasibility, 300));
        assert_eq!(build_schedule(300, 90).first.kind, AnalysisKind::Feasibility);
        assert_eq!(build_schedule(120, 120).first.kind, AnalysisKind::ArmDropping);
    }

    #[test]
    fn identical_arms_fall_back_to_default() {
        let mut s = cohort(20, ArmA::A1, 0.0, 0.0, 0);
        s.extend(cohort(20, ArmA::A2, 0.0, 0.0, 20));
        let d = arm_dropping_analysis(&s, &rule()).unwrap();
        assert_eq!(d.retained, vec![ArmA::A2]);
        assert!(d.used_default);
        assert_eq!((d.nominated_by_y11, d.nominated_by_y12), (None, None));
    }

    #[test]
    fn y11_separation_keeps_higher_arm() {
        let mut s = cohort(20, ArmA::A1, 50.0, 0.0, 0);
        s.extend(cohort(20, ArmA::A2, 0.0, 0.0, 20));
        let d = arm_dropping_analysis(&s, &rule()).unwrap();
        assert!(d.test_y11.p_value < 1e-10);
        assert!(d.test_y12.p_value > 0.05);
        assert_eq!(d.retained, vec![ArmA::A1]);
        assert!(!d.used_default);
    }

    #[test]
    fn conflicting_nominations_keep_both() {
        // A1 higher on Y11, A2 lower on Y12
        let mut s = cohort(20, ArmA::A1, 50.0, 50.0, 0);
        s.extend(cohort(20, ArmA::A2, 0.0, 0.0, 20));
        let d = arm_dropping_analysis(&s, &rule()).unwrap();
        assert_eq!(d.nominated_by_y11, Some(ArmA::A1));
        assert_eq!(d.nominated_by_y12, Some(ArmA::A2));
        assert_eq!(d.retained, vec![ArmA::A1, ArmA::A2]);
        assert!(d.retains_both());
    }

    #[test]
    fn too_early_is_a_scheduling_error() {
        let mut s = cohort(1, ArmA::A1, 0.0, 0.0, 0);
        s.extend(cohort(10, ArmA::A2, 0.0, 0.0, 1));
        assert!(matches!(arm_dropping_analysis(&s, &rule()), Err(SimError::Scheduling(_))));
        assert!(matches!(
            feasibility_analysis(&s, 0.05, Direction::Increase),
            Err(SimError::Scheduling(_))
        ));
    }

    #[test]
    fn feasibility_direction() {
        let mut s = cohort(100, ArmA::A0, 0.0, 0.0, 0);
        s.extend(cohort(50, ArmA::A1, 10.0, 0.0, 100));
        s.extend(cohort(50, ArmA::A2, 10.0, 0.0, 150));
        let up = feasibility_analysis(&s, 0.05, Direction::Increase).unwrap();
        assert!(up.proceed);
        assert!(up.test.statistic > 50.0);
        let down = feasibility_analysis(&s, 0.05, Direction::Decrease).unwrap();
        assert!(!down.proceed);
    }

    #[test]
    fn feasibility_null_does_not_proceed() {
        let mut s = cohort(30, ArmA::A0, 0.0, 0.0, 0);
        s.extend(cohort(30, ArmA::A1, 0.0, 0.0, 30));
        s.extend(cohort(30, ArmA::A2, 0.0, 0.0, 60));
        let d = feasibility_analysis(&s, 0.05, Direction::Increase).unwrap();
        assert!(!d.proceed);
        assert!((d.pooled_mean - d.control_mean).abs() < 1e-12);
    }

    #[test]
    fn feasibility_ignores_unassigned_subjects() {
        let mut s = cohort(30, ArmA::A0, 0.0, 0.0, 0);
        s.extend(cohort(30, ArmA::A1, 1.0, 0.0, 30));
        let base = feasibility_analysis(&s, 0.05, Direction::Increase).unwrap();
        s.push(SubjectRecord { index: 99, arm_a: None, arm_b: ArmB::B1, y11: 1e6, y12: 0.0, y21: 1 });
        assert_eq!(feasibility_analysis(&s, 0.05, Direction::Increase).unwrap(), base);
    }

    fn test_with_p(p: f64) -> TestResult {
        TestResult { statistic: 0.0, df: 10.0, p_value: p, tail: Tail::TwoSided, degenerate: false }
    }

    /// Exhaustive check over significance patterns, mean orderings,
    /// directions and default arms.
    #[test]
    fn retention_rule_enumeration() {
        let orders = [(1.0, 0.0), (0.0, 1.0)];
        let dirs = [Direction::Increase, Direction::Decrease];
        for sig11 in [false, true] {
            for sig12 in [false, true] {
                for m11 in orders {
                    for m12 in orders {
                        for d11 in dirs {
                            for d12 in dirs {
                                for default_arm in [ArmA::A1, ArmA::A2] {
                                    let rule = DroppingRule {
                                        alpha: 0.05,
                                        benefit: BenefitDirections { y11: d11, y12: d12 },
                                        default_arm,
                                    };
                                    let p = |s: bool| test_with_p(if s { 0.01 } else { 0.5 });
                                    let d = apply_retention_rule(&rule, p(sig11), p(sig12), m11, m12);
                                    let better = |d: Direction, m: (f64, f64)| {
                                        if d.favors(m.0, m.1) { ArmA::A1 } else { ArmA::A2 }
                                    };
                                    let mut expect = Vec::new();
                                    if sig11 {
                                        expect.push(better(d11, m11));
                                    }
                                    if sig12 {
                                        expect.push(better(d12, m12));
                                    }
                                    expect.sort();
                                    expect.dedup();
                                    if expect.is_empty() {
                                        expect.push(default_arm);
                                    }
                                    assert_eq!(d.retained, expect);
                                    assert_eq!(d.used_default, !sig11 && !sig12);
                                    assert!(!d.retained.is_empty());
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    fn arb_subjects() -> impl Strategy<Value = Vec<SubjectRecord>> {
        prop::collection::vec((0usize..3, -30.0f64..30.0, -30.0f64..30.0), 12..80).prop_map(|rows| {
            let mut out: Vec<SubjectRecord> = rows
                .into_iter()
                .enumerate()
                .map(|(i, (a, y11, y12))| subject(i as u32, ArmA::ALL[a], y11, y12))
                .collect();
            // guarantee two subjects in every arm
            for (k, arm) in ArmA::ALL.into_iter().enumerate() {
                out[2 * k].arm_a = Some(arm);
                out[2 * k + 1].arm_a = Some(arm);
            }
            out
        })
    }

    proptest! {
        #[test]
        fn feasibility_invariant_to_permutation(subjects in arb_subjects(), seed in any::<u64>()) {
            let mut shuffled = subjects.clone();
            let mut stream = crate::stats::Stream::from_seed(seed);
            for i in (1..shuffled.len()).rev() {
                let j = stream.index(i + 1);
                shuffled.swap(i, j);
            }
            let a = feasibility_analysis(&subjects, 0.05, Direction::Increase).unwrap();
            let b = feasibility_analysis(&shuffled, 0.05, Direction::Increase).unwrap();
            prop_assert_eq!(a.proceed, b.proceed);
            prop_assert!((a.test.p_value - b.test.p_value).abs() < 1e-9);
        }

        #[test]
        fn decisions_are_scale_free(subjects in arb_subjects(), scale in 0.01f64..100.0) {
            let scaled: Vec<_> = subjects.iter().map(|s| SubjectRecord { y11: s.y11 * scale, ..*s }).collect();
            let a = arm_dropping_analysis(&subjects, &rule()).unwrap();
            let b = arm_dropping_analysis(&scaled, &rule()).unwrap();
            prop_assert!((a.test_y11.statistic - b.test_y11.statistic).abs() < 1e-6 * (1.0 + a.test_y11.statistic.abs()));
            // avoid p-values sitting on the boundary within rounding
            if (a.test_y11.p_value - 0.05).abs() > 1e-9 {
                prop_assert_eq!(a.nominated_by_y11, b.nominated_by_y11);
            }
            let fa = feasibility_analysis(&subjects, 0.05, Direction::Increase).unwrap();
            let fb = feasibility_analysis(&scaled, 0.05, Direction::Increase).unwrap();
            if (fa.test.p_value - 0.05).abs() > 1e-9 {
                prop_assert_eq!(fa.proceed, fb.proceed);
            }
        }
    }
}
