//! Factorial randomization and outcome generation for virtual subjects.

use serde::{Deserialize, Serialize};

use crate::model::{ArmA, ArmB, BiomarkerPair, ScenarioConfig, PROBABILITY_CEILING, PROBABILITY_FLOOR};
use crate::stats::Stream;

/// Arms currently open to randomization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveArms {
    /// `None` once Domain A has been terminated.
    domain_a: Option<Vec<ArmA>>,
}

impl ActiveArms {
    pub fn all() -> Self {
        Self { domain_a: Some(ArmA::ALL.to_vec()) }
    }

    /// Control plus the retained treatment arms. Returns `None` if no
    /// treatment arm is retained.
    pub fn retaining(retained: &[ArmA]) -> Option<Self> {
        let mut arms = vec![ArmA::A0];
        for arm in [ArmA::A1, ArmA::A2] {
            if retained.contains(&arm) {
                arms.push(arm);
            }
        }
        (arms.len() > 1).then_some(Self { domain_a: Some(arms) })
    }

    pub fn terminated() -> Self {
        Self { domain_a: None }
    }

    pub fn domain_a(&self) -> Option<&[ArmA]> {
        self.domain_a.as_deref()
    }

    pub fn is_terminated(&self) -> bool {
        self.domain_a.is_none()
    }
}

/// Equal allocation within each open domain, independently across domains.
pub fn randomize_subject(stream: &mut Stream, active: &ActiveArms) -> (Option<ArmA>, ArmB) {
    let arm_a = active.domain_a().map(|arms| arms[stream.index(arms.len())]);
    let arm_b = if stream.index(2) == 0 { ArmB::B0 } else { ArmB::B1 };
    (arm_a, arm_b)
}

/// Draws (Y11, Y12) around the arm's mean shift.
pub fn generate_biomarkers(arm_a: Option<ArmA>, config: &ScenarioConfig, stream: &mut Stream) -> BiomarkerPair {
    let mean = config.biomarker_mean(arm_a);
    let y11 = stream.normal(mean.y11, config.biomarker_sds.y11);
    let y12 = stream.normal(mean.y12, config.biomarker_sds.y12);
    BiomarkerPair { y11, y12 }
}

/// Binary Phase III outcome and whether its probability had to be clamped.
pub fn generate_phase3_outcome(
    arm_a: Option<ArmA>,
    arm_b: ArmB,
    config: &ScenarioConfig,
    stream: &mut Stream,
) -> (u8, bool) {
    let raw = config.event_probability(arm_a, arm_b);
    let p = raw.clamp(PROBABILITY_FLOOR, PROBABILITY_CEILING);
    let y = stream.bernoulli(p).expect("clamped probability lies in [0, 1]");
    (y, p != raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Arm;
    use std::collections::BTreeMap;

    fn mc_bound(p: f64, n: usize) -> f64 {
        3.0 * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn equal_allocation_across_three_arms() {
        let mut s = Stream::from_seed(11);
        let n = 300_000;
        let mut counts = [0usize; 3];
        let mut b1 = 0usize;
        for _ in 0..n {
            let (a, b) = randomize_subject(&mut s, &ActiveArms::all());
            counts[a.unwrap() as usize] += 1;
            b1 += usize::from(b == ArmB::B1);
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 1.0 / 3.0).abs() < mc_bound(1.0 / 3.0, n), "{f}");
        }
        assert!((b1 as f64 / n as f64 - 0.5).abs() < mc_bound(0.5, n));
    }

    #[test]
    fn terminated_domain_has_no_assignment() {
        let mut s = Stream::from_seed(3);
        let n = 100_000;
        let mut b1 = 0;
        for _ in 0..n {
            let (a, b) = randomize_subject(&mut s, &ActiveArms::terminated());
            assert!(a.is_none());
            b1 += usize::from(b == ArmB::B1);
        }
        assert!((b1 as f64 / n as f64 - 0.5).abs() < mc_bound(0.5, n));
    }

    #[test]
    fn dropped_arm_never_assigned() {
        let mut s = Stream::from_seed(5);
        let active = ActiveArms::retaining(&[ArmA::A2]).unwrap();
        for _ in 0..10_000 {
            assert_ne!(randomize_subject(&mut s, &active).0, Some(ArmA::A1));
        }
        assert!(ActiveArms::retaining(&[]).is_none());
    }

    #[test]
    fn biomarker_means() {
        let cfg = ScenarioConfig {
            biomarker_effects: BTreeMap::from([(Arm::A1, BiomarkerPair { y11: -10.0, y12: 4.0 })]),
            ..ScenarioConfig::default()
        };
        let mut s = Stream::from_seed(99);
        let n = 100_000;
        let mean = (0..n).map(|_| generate_biomarkers(Some(ArmA::A1), &cfg, &mut s).y11).sum::<f64>() / n as f64;
        assert!((mean + 10.0).abs() < 0.1, "{mean}");

        let zero_sd = ScenarioConfig { biomarker_sds: BiomarkerPair { y11: 0.0, y12: 0.0 }, ..cfg.clone() };
        let v = generate_biomarkers(Some(ArmA::A1), &zero_sd, &mut s);
        assert_eq!((v.y11, v.y12), (-10.0, 4.0));
        let c = generate_biomarkers(Some(ArmA::A0), &zero_sd, &mut s);
        assert_eq!((c.y11, c.y12), (0.0, 0.0));
        let absent = generate_biomarkers(None, &zero_sd, &mut s);
        assert_eq!((absent.y11, absent.y12), (0.0, 0.0));
    }

    #[test]
    fn control_event_rate() {
        let cfg = ScenarioConfig::default();
        let mut s = Stream::from_seed(1);
        let n = 100_000;
        let events: usize = (0..n)
            .map(|_| usize::from(generate_phase3_outcome(Some(ArmA::A0), ArmB::B0, &cfg, &mut s).0))
            .sum();
        assert!((events as f64 / n as f64 - 0.4).abs() < mc_bound(0.4, n));
    }

    #[test]
    fn clamping_is_reported() {
        let cfg = ScenarioConfig {
            control_event_rate: 0.9995,
            ..ScenarioConfig::default()
        };
        let mut s = Stream::from_seed(1);
        assert!(generate_phase3_outcome(None, ArmB::B0, &cfg, &mut s).1);
        let cfg = ScenarioConfig::default();
        assert!(!generate_phase3_outcome(None, ArmB::B0, &cfg, &mut s).1);
    }

    #[test]
    fn deterministic_given_stream() {
        let cfg = crate::model::presets::scenario_a();
        let draw = |seed| {
            let mut s = Stream::from_seed(seed);
            let (a, b) = randomize_subject(&mut s, &ActiveArms::all());
            let y = generate_biomarkers(a, &cfg, &mut s);
            let (o, _) = generate_phase3_outcome(a, b, &cfg, &mut s);
            (a, b, y.y11.to_bits(), y.y12.to_bits(), o)
        };
        assert_eq!(draw(8), draw(8));
    }
}
