//! Trial notation and scenario configuration.
//!
//! The motivating instance has two domains: fluids (A0 control, A1, A2) and
//! mineralocorticoid (B0 control, B1). Phase II outcomes are the continuous
//! biomarkers Y11 and Y12; the Phase III outcome Y21 is binary.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FieldIssue, ValidationErrors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArmA {
    A0,
    A1,
    A2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArmB {
    B0,
    B1,
}

/// Arm label used as a key in scenario maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Arm {
    A0,
    A1,
    A2,
    B0,
    B1,
}

/// Something the final analysis can declare successful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Treatment {
    A1,
    A2,
    /// Both non-control fluids pooled, used when one arm was dropped.
    #[serde(rename = "Apooled")]
    APooled,
    B1,
}

impl ArmA {
    pub const ALL: [ArmA; 3] = [ArmA::A0, ArmA::A1, ArmA::A2];

    pub fn label(self) -> Arm {
        match self {
            ArmA::A0 => Arm::A0,
            ArmA::A1 => Arm::A1,
            ArmA::A2 => Arm::A2,
        }
    }

    pub fn treatment(self) -> Option<Treatment> {
        match self {
            ArmA::A0 => None,
            ArmA::A1 => Some(Treatment::A1),
            ArmA::A2 => Some(Treatment::A2),
        }
    }
}

impl ArmB {
    pub fn label(self) -> Arm {
        match self {
            ArmB::B0 => Arm::B0,
            ArmB::B1 => Arm::B1,
        }
    }
}

impl fmt::Display for ArmA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.label().fmt(f)
    }
}

impl fmt::Display for ArmB {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.label().fmt(f)
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::A0 => "A0",
            Arm::A1 => "A1",
            Arm::A2 => "A2",
            Arm::B0 => "B0",
            Arm::B1 => "B1",
        })
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Treatment::A1 => "A1",
            Treatment::A2 => "A2",
            Treatment::APooled => "Apooled",
            Treatment::B1 => "B1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
}

impl Direction {
    /// True when `a` is better than `b` in this direction.
    pub fn favors(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Increase => a > b,
            Direction::Decrease => a < b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Continuous,
    Binary,
}

/// Outcome `Y_po`: the o-th outcome of phase p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub phase: u8,
    pub index: u8,
    pub kind: OutcomeKind,
    pub direction_of_benefit: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub name: String,
    /// Arm labels, control first.
    pub arms: Vec<String>,
}

impl DomainSpec {
    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub domains: Vec<DomainSpec>,
    pub phase2_outcomes: Vec<OutcomeSpec>,
    pub phase3_outcome: OutcomeSpec,
}

impl DesignSpec {
    /// The 3x2 instance with outcomes Y11, Y12 (continuous) and Y21 (binary).
    pub fn motivating(benefit: BenefitDirections) -> Self {
        let domain = |name: &str, arms: &[&str]| DomainSpec {
            name: name.to_owned(),
            arms: arms.iter().map(|a| (*a).to_owned()).collect(),
        };
        Self {
            domains: vec![domain("A", &["A0", "A1", "A2"]), domain("B", &["B0", "B1"])],
            phase2_outcomes: vec![
                OutcomeSpec { phase: 1, index: 1, kind: OutcomeKind::Continuous, direction_of_benefit: benefit.y11 },
                OutcomeSpec { phase: 1, index: 2, kind: OutcomeKind::Continuous, direction_of_benefit: benefit.y12 },
            ],
            phase3_outcome: OutcomeSpec {
                phase: 2,
                index: 1,
                kind: OutcomeKind::Binary,
                // two-sided final tests; the label is informational
                direction_of_benefit: Direction::Decrease,
            },
        }
    }
}

/// A pair of values for the two Phase II biomarkers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiomarkerPair {
    pub y11: f64,
    pub y12: f64,
}

/// Direction in which each biomarker indicates benefit. Arm dropping keeps
/// the arm that is better in this direction; feasibility tests the pooled
/// arms against control in the Y11 direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenefitDirections {
    pub y11: Direction,
    pub y12: Direction,
}

impl Default for BenefitDirections {
    fn default() -> Self {
        // highest Y11 and lowest Y12 are retained
        Self { y11: Direction::Increase, y12: Direction::Decrease }
    }
}

pub const DEFAULT_SD: f64 = 10.0;
pub const DEFAULT_CONTROL_EVENT_RATE: f64 = 0.40;
pub const DEFAULT_N_TOTAL: u32 = 1000;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_REPLICATES: u64 = 1000;

/// Interim timings 90, 120, ..., 300.
pub fn default_timing_grid() -> Vec<u32> {
    (90..=300).step_by(30).collect()
}

/// One simulation scenario. Serialized with lower_snake_case keys; unknown
/// keys are rejected and missing keys take the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_id: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Mean biomarker shift per Domain A arm; control must be 0.
    pub biomarker_effects: BTreeMap<Arm, BiomarkerPair>,
    pub biomarker_sds: BiomarkerPair,
    pub benefit_direction: BenefitDirections,
    /// Additive risk difference on the Phase III event probability.
    pub phase3_effects: BTreeMap<Arm, f64>,
    pub control_event_rate: f64,
    pub n_total: u32,
    pub n_drop_grid: Vec<u32>,
    pub n_feas_grid: Vec<u32>,
    pub alpha_drop: f64,
    pub alpha_feas: f64,
    pub alpha_final: f64,
    pub default_retained_arm: ArmA,
    pub replicates: u64,
    pub base_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario_id: 0,
            name: None,
            biomarker_effects: BTreeMap::new(),
            biomarker_sds: BiomarkerPair { y11: DEFAULT_SD, y12: DEFAULT_SD },
            benefit_direction: BenefitDirections::default(),
            phase3_effects: BTreeMap::new(),
            control_event_rate: DEFAULT_CONTROL_EVENT_RATE,
            n_total: DEFAULT_N_TOTAL,
            n_drop_grid: default_timing_grid(),
            n_feas_grid: default_timing_grid(),
            alpha_drop: DEFAULT_ALPHA,
            alpha_feas: DEFAULT_ALPHA,
            alpha_final: DEFAULT_ALPHA,
            default_retained_arm: ArmA::A2,
            replicates: DEFAULT_REPLICATES,
            base_seed: 20_240_611,
        }
    }
}

/// Event probabilities outside these bounds are clamped before sampling.
pub const PROBABILITY_FLOOR: f64 = 0.001;
pub const PROBABILITY_CEILING: f64 = 0.999;

impl ScenarioConfig {
    pub fn design(&self) -> DesignSpec {
        DesignSpec::motivating(self.benefit_direction)
    }

    /// Mean of (Y11, Y12) for a subject; control and unassigned subjects
    /// have mean zero.
    pub fn biomarker_mean(&self, arm_a: Option<ArmA>) -> BiomarkerPair {
        match arm_a {
            None | Some(ArmA::A0) => BiomarkerPair::default(),
            Some(arm) => self.biomarker_effects.get(&arm.label()).copied().unwrap_or_default(),
        }
    }

    pub fn risk_difference(&self, arm: Arm) -> f64 {
        self.phase3_effects.get(&arm).copied().unwrap_or(0.0)
    }

    /// Event probability before clamping.
    pub fn event_probability(&self, arm_a: Option<ArmA>, arm_b: ArmB) -> f64 {
        let a = arm_a.map_or(0.0, |a| self.risk_difference(a.label()));
        self.control_event_rate + a + self.risk_difference(arm_b.label())
    }

    /// True when the treatment has a nonzero Phase III effect.
    pub fn is_effective(&self, arm: Arm) -> bool {
        self.risk_difference(arm) != 0.0
    }

    /// Domain A arms the arm-dropping analysis ought to keep: arms whose
    /// effects on both biomarkers point in the benefit directions. If none
    /// or both qualify, the default arm is the correct choice.
    pub fn correct_retention(&self) -> Vec<ArmA> {
        let qualifies = |arm: ArmA| {
            let m = self.biomarker_mean(Some(arm));
            self.benefit_direction.y11.favors(m.y11, 0.0) && self.benefit_direction.y12.favors(m.y12, 0.0)
        };
        let set: Vec<ArmA> = [ArmA::A1, ArmA::A2].into_iter().filter(|&a| qualifies(a)).collect();
        if set.len() == 1 {
            set
        } else {
            vec![self.default_retained_arm]
        }
    }

    pub fn grid_cells(&self) -> Vec<(u32, u32)> {
        self.n_drop_grid
            .iter()
            .flat_map(|&d| self.n_feas_grid.iter().map(move |&f| (d, f)))
            .collect()
    }

    /// Checks every constraint and reports all violations together.
    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut issues = Vec::new();
        let mut fail = |path: String, reason: String| issues.push(FieldIssue { path, reason });

        for (arm, shift) in &self.biomarker_effects {
            let path = format!("biomarker_effects.{arm}");
            match arm {
                Arm::A0 if shift.y11 != 0.0 || shift.y12 != 0.0 => {
                    fail(path, "control arm effect is fixed at 0".into())
                }
                Arm::B0 | Arm::B1 => fail(path, "biomarker effects apply to Domain A arms only".into()),
                _ if !shift.y11.is_finite() || !shift.y12.is_finite() => fail(path, "effect must be finite".into()),
                _ => {}
            }
        }
        for (name, sd) in [("y11", self.biomarker_sds.y11), ("y12", self.biomarker_sds.y12)] {
            if !(sd.is_finite() && sd >= 0.0) {
                fail(format!("biomarker_sds.{name}"), format!("must be a finite non-negative value, got {sd}"));
            }
        }
        for (arm, rd) in &self.phase3_effects {
            let path = format!("phase3_effects.{arm}");
            if !rd.is_finite() {
                fail(path, "risk difference must be finite".into());
            } else if matches!(arm, Arm::A0 | Arm::B0) && *rd != 0.0 {
                fail(path, "control arm risk difference is fixed at 0".into());
            }
        }
        if !(self.control_event_rate > 0.0 && self.control_event_rate < 1.0) {
            fail(
                "control_event_rate".into(),
                format!("must lie in (0, 1), got {}", self.control_event_rate),
            );
        } else {
            for arm_a in [None, Some(ArmA::A1), Some(ArmA::A2)] {
                for arm_b in [ArmB::B0, ArmB::B1] {
                    let p = self.event_probability(arm_a, arm_b);
                    if arm_a.is_none() && arm_b == ArmB::B0 {
                        continue;
                    }
                    if !(p > 0.0 && p < 1.0) {
                        let offending = match (arm_a, arm_b) {
                            (Some(a), ArmB::B1) => format!("{a}+B1"),
                            (Some(a), ArmB::B0) => a.to_string(),
                            (None, b) => b.to_string(),
                        };
                        let key = match arm_a {
                            Some(a) if self.risk_difference(a.label()) != 0.0 => a.to_string(),
                            _ => arm_b.to_string(),
                        };
                        fail(
                            format!("phase3_effects.{key}"),
                            format!("event probability for arm combination {offending} is {p:.4}, outside (0, 1)"),
                        );
                    }
                }
            }
        }
        if self.n_total == 0 {
            fail("n_total".into(), "must be positive".into());
        }
        for (name, grid) in [("n_drop_grid", &self.n_drop_grid), ("n_feas_grid", &self.n_feas_grid)] {
            if grid.is_empty() {
                fail(name.into(), "grid must not be empty".into());
            }
            for (i, &n) in grid.iter().enumerate() {
                if n == 0 || n > self.n_total {
                    fail(format!("{name}[{i}]"), format!("trigger {n} must lie in 1..={}", self.n_total));
                }
            }
        }
        for (name, alpha) in [
            ("alpha_drop", self.alpha_drop),
            ("alpha_feas", self.alpha_feas),
            ("alpha_final", self.alpha_final),
        ] {
            if !(alpha > 0.0 && alpha < 1.0) {
                fail(name.into(), format!("must lie in (0, 1), got {alpha}"));
            }
        }
        if self.default_retained_arm == ArmA::A0 {
            fail("default_retained_arm".into(), "must be a non-control arm (A1 or A2)".into());
        }
        if self.replicates == 0 {
            fail("replicates".into(), "must be positive".into());
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(ValidationErrors(issues))
        }
    }
}

/// One virtual patient. Outcomes are observed at enrollment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub index: u32,
    /// Absent for subjects enrolled after Domain A was terminated.
    pub arm_a: Option<ArmA>,
    pub arm_b: ArmB,
    pub y11: f64,
    pub y12: f64,
    pub y21: u8,
}

/// Effect patterns from the three representative scenarios, plus a
/// global null.
pub mod presets {
    use super::*;

    fn biomarkers(a1: (f64, f64), a2: (f64, f64)) -> BTreeMap<Arm, BiomarkerPair> {
        BTreeMap::from([
            (Arm::A1, BiomarkerPair { y11: a1.0, y12: a1.1 }),
            (Arm::A2, BiomarkerPair { y11: a2.0, y12: a2.1 }),
        ])
    }

    fn phase3(a1: f64, a2: f64, b1: f64) -> BTreeMap<Arm, f64> {
        BTreeMap::from([(Arm::A1, a1), (Arm::A2, a2), (Arm::B1, b1)])
    }

    pub fn global_null() -> ScenarioConfig {
        ScenarioConfig { name: Some("global null".into()), ..ScenarioConfig::default() }
    }

    /// Both fluids shift Y11 by -10; on Y12 A1 moves +10 and A2 -10.
    /// Lower values are the benefit direction for both biomarkers, so A2 is
    /// the arm to keep.
    pub fn scenario_a() -> ScenarioConfig {
        ScenarioConfig {
            scenario_id: 1,
            name: Some("A".into()),
            biomarker_effects: biomarkers((-10.0, 10.0), (-10.0, -10.0)),
            benefit_direction: BenefitDirections { y11: Direction::Decrease, y12: Direction::Decrease },
            phase3_effects: phase3(0.1, 0.1, 0.0),
            ..ScenarioConfig::default()
        }
    }

    /// Only A2 moves the biomarkers (Y11 -10, Y12 +10) and the outcome.
    pub fn scenario_b() -> ScenarioConfig {
        ScenarioConfig {
            scenario_id: 2,
            name: Some("B".into()),
            biomarker_effects: biomarkers((0.0, 0.0), (-10.0, 10.0)),
            benefit_direction: BenefitDirections { y11: Direction::Decrease, y12: Direction::Increase },
            phase3_effects: phase3(0.0, 0.1, 0.0),
            ..ScenarioConfig::default()
        }
    }

    /// Only A1 moves the biomarkers (Y11 -10, Y12 +10) and the outcome.
    pub fn scenario_c() -> ScenarioConfig {
        ScenarioConfig {
            scenario_id: 3,
            name: Some("C".into()),
            biomarker_effects: biomarkers((-10.0, 10.0), (0.0, 0.0)),
            benefit_direction: BenefitDirections { y11: Direction::Decrease, y12: Direction::Increase },
            phase3_effects: phase3(0.1, 0.0, 0.0),
            ..ScenarioConfig::default()
        }
    }
}
