//! Replicate execution, timing-grid sweeps and aggregation of operating
//! characteristics.
//!
//! Every replicate owns a stream seeded from [`derive_seed`], so results do
//! not depend on scheduling. Aggregation folds replicates in index order.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FieldIssue, Result, SimError, ValidationErrors};
use crate::final_analysis::{analyze, build_final_model, Branch, GatekeepingOutcome};
use crate::generator::{generate_biomarkers, generate_phase3_outcome, randomize_subject, ActiveArms};
use crate::interim::{
    arm_dropping_analysis, build_schedule, feasibility_analysis, AnalysisKind, AnalysisSchedule, DroppingRule,
    FeasibilityDecision, RetentionDecision,
};
use crate::model::{Arm, ArmA, ScenarioConfig, SubjectRecord, Treatment};
use crate::stats::Stream;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 output function; a bijection on u64.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one replicate of one grid cell. For a fixed (base, scenario,
/// cell) prefix the map from replicate index to seed is a bijection.
pub fn derive_seed(base_seed: u64, scenario_id: u32, cell: (u32, u32), replicate: u64) -> u64 {
    let mut h = mix64(base_seed.wrapping_add(GOLDEN_GAMMA));
    h = mix64(h ^ u64::from(scenario_id).wrapping_add(GOLDEN_GAMMA));
    h = mix64(h ^ ((u64::from(cell.0) << 32) | u64::from(cell.1)).wrapping_add(GOLDEN_GAMMA));
    mix64(h ^ replicate.wrapping_add(GOLDEN_GAMMA))
}

/// Full path of one simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub schedule: AnalysisSchedule,
    pub retention: Option<RetentionDecision>,
    pub feasibility: Option<FeasibilityDecision>,
    pub branch: Branch,
    /// `None` when a final-analysis fit failed.
    pub gatekeeping: Option<GatekeepingOutcome>,
    pub successful_arms: BTreeSet<Treatment>,
    /// Subjects whose event probability was clamped.
    pub clamp_count: u32,
    pub fit_failure: Option<String>,
    /// Subjects enrolled after Domain A was terminated.
    pub n_without_domain_a: u32,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        self.fit_failure.is_some()
    }

    /// Successes with the pooled fluid credited to the arm that was kept.
    pub fn declared(&self) -> Declared {
        let mut d = Declared {
            a1: self.successful_arms.contains(&Treatment::A1),
            a2: self.successful_arms.contains(&Treatment::A2),
            b1: self.successful_arms.contains(&Treatment::B1),
            pooled: self.successful_arms.contains(&Treatment::APooled),
        };
        if d.pooled {
            if let Some(r) = &self.retention {
                d.a1 |= r.retained == [ArmA::A1];
                d.a2 |= r.retained == [ArmA::A2];
            }
        }
        d
    }
}

/// Per-arm success flags after crediting the pooled claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Declared {
    pub a1: bool,
    pub a2: bool,
    pub b1: bool,
    pub pooled: bool,
}

fn trigger_issue(name: &str, n: u32, n_total: u32) -> SimError {
    SimError::Config(ValidationErrors(vec![FieldIssue {
        path: name.into(),
        reason: format!("trigger {n} exceeds n_total {n_total}"),
    }]))
}

/// Simulates one trial end to end.
pub fn run_replicate(config: &ScenarioConfig, n_drop: u32, n_feas: u32, replicate_seed: u64) -> Result<TrialResult> {
    if n_drop > config.n_total || n_drop == 0 {
        return Err(trigger_issue("n_drop", n_drop, config.n_total));
    }
    if n_feas > config.n_total || n_feas == 0 {
        return Err(trigger_issue("n_feas", n_feas, config.n_total));
    }
    let schedule = build_schedule(n_drop, n_feas);
    let rule = DroppingRule {
        alpha: config.alpha_drop,
        benefit: config.benefit_direction,
        default_arm: config.default_retained_arm,
    };
    let mut stream = Stream::from_seed(replicate_seed);
    let mut active = ActiveArms::all();
    let mut subjects: Vec<SubjectRecord> = Vec::with_capacity(config.n_total as usize);
    let mut retention = None;
    let mut feasibility: Option<FeasibilityDecision> = None;
    let mut clamp_count = 0;
    let mut pending = [schedule.first, schedule.second].into_iter().peekable();

    for index in 0..config.n_total {
        let (arm_a, arm_b) = randomize_subject(&mut stream, &active);
        let biomarkers = generate_biomarkers(arm_a, config, &mut stream);
        let (y21, clamped) = generate_phase3_outcome(arm_a, arm_b, config, &mut stream);
        clamp_count += u32::from(clamped);
        subjects.push(SubjectRecord { index, arm_a, arm_b, y11: biomarkers.y11, y12: biomarkers.y12, y21 });

        while let Some(next) = pending.next_if(|a| a.trigger as usize == subjects.len()) {
            match next.kind {
                AnalysisKind::ArmDropping if active.is_terminated() => {}
                AnalysisKind::ArmDropping => {
                    let decision = arm_dropping_analysis(&subjects, &rule)?;
                    active = ActiveArms::retaining(&decision.retained)
                        .ok_or_else(|| SimError::Internal("retention decision kept no arm".into()))?;
                    retention = Some(decision);
                }
                AnalysisKind::Feasibility => {
                    let decision = feasibility_analysis(&subjects, config.alpha_feas, config.benefit_direction.y11)?;
                    if !decision.proceed {
                        active = ActiveArms::terminated();
                    }
                    feasibility = Some(decision);
                }
            }
        }
    }

    let branch = match (&feasibility, &retention) {
        (Some(f), _) if !f.proceed => Branch::DomainATerminated,
        (Some(_), Some(r)) if r.retains_both() => Branch::BothArmsRetained,
        (Some(_), Some(_)) => Branch::OneArmRetained,
        _ => return Err(SimError::Internal("trial finished without both interim analyses".into())),
    };
    let model = build_final_model(&subjects, branch)?;
    let (gatekeeping, fit_failure) = match analyze(&model, config.alpha_final) {
        Ok(g) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let successful_arms = gatekeeping.as_ref().map(|g| g.successful_arms.clone()).unwrap_or_default();
    let n_without_domain_a = subjects.iter().filter(|s| s.arm_a.is_none()).count() as u32;

    Ok(TrialResult {
        seed: replicate_seed,
        schedule,
        retention,
        feasibility,
        branch,
        gatekeeping,
        successful_arms,
        clamp_count,
        fit_failure,
        n_without_domain_a,
    })
}

/// Aggregated probabilities for one grid cell.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OperatingCharacteristics {
    /// Among replicates where arm dropping ran: retained set equals the
    /// designed-correct set.
    pub p_retain_correct: f64,
    pub p_retain_both: f64,
    /// Among replicates where arm dropping ran: at least one biomarker
    /// nominated an arm.
    pub p_any_nomination: f64,
    pub p_proceed: f64,
    pub p_success_a1: f64,
    pub p_success_a2: f64,
    pub p_success_apooled: f64,
    pub p_success_b1: f64,
    pub p_success_a1_b1: f64,
    pub p_success_a2_b1: f64,
    pub power: f64,
    pub fwer: f64,
    pub n_effective: u64,
    pub n_failed: u64,
    pub n_retention_runs: u64,
    pub n_proceed: u64,
    pub n_one_retained: u64,
    pub n_both_retained: u64,
    pub n_terminated: u64,
    pub clamp_total: u64,
    pub gating_violations: u64,
}

#[derive(Default)]
struct Tally {
    effective: u64,
    failed: u64,
    retention_runs: u64,
    retain_correct: u64,
    retain_both: u64,
    any_nomination: u64,
    proceed: u64,
    a1: u64,
    a2: u64,
    pooled: u64,
    b1: u64,
    a1_b1: u64,
    a2_b1: u64,
    power: u64,
    fwer: u64,
    branches: [u64; 3],
    clamps: u64,
    gating_violations: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Tally {
    fn add(&mut self, config: &ScenarioConfig, correct: &[ArmA], r: &TrialResult) {
        self.clamps += u64::from(r.clamp_count);
        if let Some(g) = &r.gatekeeping {
            self.gating_violations += u64::from(!g.is_monotone());
        }
        if r.failed() {
            self.failed += 1;
            return;
        }
        self.effective += 1;
        if let Some(ret) = &r.retention {
            self.retention_runs += 1;
            self.retain_correct += u64::from(ret.retained == correct);
            self.retain_both += u64::from(ret.retains_both());
            self.any_nomination += u64::from(!ret.used_default);
        }
        self.proceed += u64::from(r.feasibility.is_some_and(|f| f.proceed));
        self.branches[match r.branch {
            Branch::OneArmRetained => 0,
            Branch::BothArmsRetained => 1,
            Branch::DomainATerminated => 2,
        }] += 1;

        let d = r.declared();
        self.a1 += u64::from(d.a1);
        self.a2 += u64::from(d.a2);
        self.pooled += u64::from(d.pooled);
        self.b1 += u64::from(d.b1);
        self.a1_b1 += u64::from(d.a1 && d.b1);
        self.a2_b1 += u64::from(d.a2 && d.b1);

        let eff = |arm| config.is_effective(arm);
        let a_has_effect = eff(Arm::A1) || eff(Arm::A2);
        let b_has_effect = eff(Arm::B1);
        let a_found = (d.a1 && eff(Arm::A1)) || (d.a2 && eff(Arm::A2));
        if (a_has_effect || b_has_effect) && (!a_has_effect || a_found) && (!b_has_effect || d.b1) {
            self.power += 1;
        }
        let false_claim = (d.a1 && !eff(Arm::A1)) || (d.a2 && !eff(Arm::A2)) || (d.b1 && !eff(Arm::B1));
        self.fwer += u64::from(false_claim);
    }

    fn finish(self) -> OperatingCharacteristics {
        let n = self.effective;
        OperatingCharacteristics {
            p_retain_correct: ratio(self.retain_correct, self.retention_runs),
            p_retain_both: ratio(self.retain_both, self.retention_runs),
            p_any_nomination: ratio(self.any_nomination, self.retention_runs),
            p_proceed: ratio(self.proceed, n),
            p_success_a1: ratio(self.a1, n),
            p_success_a2: ratio(self.a2, n),
            p_success_apooled: ratio(self.pooled, n),
            p_success_b1: ratio(self.b1, n),
            p_success_a1_b1: ratio(self.a1_b1, n),
            p_success_a2_b1: ratio(self.a2_b1, n),
            power: ratio(self.power, n),
            fwer: ratio(self.fwer, n),
            n_effective: n,
            n_failed: self.failed,
            n_retention_runs: self.retention_runs,
            n_proceed: self.proceed,
            n_one_retained: self.branches[0],
            n_both_retained: self.branches[1],
            n_terminated: self.branches[2],
            clamp_total: self.clamps,
            gating_violations: self.gating_violations,
        }
    }
}

/// Folds replicate results, in the given order, into operating
/// characteristics.
pub fn aggregate<'a>(config: &ScenarioConfig, results: impl IntoIterator<Item = &'a TrialResult>) -> OperatingCharacteristics {
    let correct = config.correct_retention();
    let mut tally = Tally::default();
    for r in results {
        tally.add(config, &correct, r);
    }
    tally.finish()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses all available cores.
    pub threads: Option<usize>,
    /// Keep every replicate's [`TrialResult`] in the output.
    pub keep_traces: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub scenario_id: u32,
    pub n_drop: u32,
    pub n_feas: u32,
    pub schedule: AnalysisSchedule,
    pub oc: OperatingCharacteristics,
    pub traces: Vec<TrialResult>,
}

fn cell_in_pool(config: &ScenarioConfig, n_drop: u32, n_feas: u32, keep_traces: bool) -> Result<CellResult> {
    let results: Vec<TrialResult> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(config.base_seed, config.scenario_id, (n_drop, n_feas), rep);
            run_replicate(config, n_drop, n_feas, seed)
        })
        .collect::<Result<_>>()?;
    let oc = aggregate(config, &results);
    Ok(CellResult {
        scenario_id: config.scenario_id,
        n_drop,
        n_feas,
        schedule: build_schedule(n_drop, n_feas),
        oc,
        traces: if keep_traces { results } else { Vec::new() },
    })
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))
}

/// Runs `config.replicates` replicates of one timing cell.
pub fn run_cell(config: &ScenarioConfig, n_drop: u32, n_feas: u32) -> Result<OperatingCharacteristics> {
    run_cell_with(config, n_drop, n_feas, &RunOptions::default()).map(|c| c.oc)
}

pub fn run_cell_with(config: &ScenarioConfig, n_drop: u32, n_feas: u32, options: &RunOptions) -> Result<CellResult> {
    config.validate()?;
    pool(options.threads)?.install(|| cell_in_pool(config, n_drop, n_feas, options.keep_traces))
}

/// Sweeps the Cartesian product of the two timing grids.
pub fn run_grid(config: &ScenarioConfig) -> Result<Vec<CellResult>> {
    run_grid_with(config, &RunOptions::default())
}

pub fn run_grid_with(config: &ScenarioConfig, options: &RunOptions) -> Result<Vec<CellResult>> {
    config.validate()?;
    let pool = pool(options.threads)?;
    pool.install(|| {
        config
            .grid_cells()
            .into_iter()
            .map(|(d, f)| cell_in_pool(config, d, f, options.keep_traces))
            .collect()
    })
}
