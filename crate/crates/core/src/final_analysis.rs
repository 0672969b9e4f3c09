//! Phase III analysis along the branch selected by the interim decisions.
//!
//! Each branch fits a main-effects logistic model of Y21 on treatment
//! indicators. Hypotheses are tested with likelihood-ratio tests at the full
//! final alpha, and a hypothesis can only be rejected when every
//! intersection hypothesis above it in the hierarchy was rejected first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{SimError, StatsError};
use crate::model::{ArmA, ArmB, SubjectRecord, Treatment};
use crate::stats::{fit_grouped, lr_test, GroupedData, LogisticFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    OneArmRetained,
    BothArmsRetained,
    DomainATerminated,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::OneArmRetained => "one_arm_retained",
            Branch::BothArmsRetained => "both_arms_retained",
            Branch::DomainATerminated => "domain_a_terminated",
        })
    }
}

/// Treatment indicator used as a model covariate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    /// 1 for any subject randomized to A1 or A2.
    PooledFluid,
    A1,
    A2,
    B1,
}

impl Covariate {
    fn value(self, s: &SubjectRecord) -> f64 {
        let on = match self {
            Covariate::PooledFluid => matches!(s.arm_a, Some(ArmA::A1 | ArmA::A2)),
            Covariate::A1 => s.arm_a == Some(ArmA::A1),
            Covariate::A2 => s.arm_a == Some(ArmA::A2),
            Covariate::B1 => s.arm_b == ArmB::B1,
        };
        f64::from(u8::from(on))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectFilter {
    /// Subjects with a Domain A assignment.
    AssignedDomainA,
    AllSubjects,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalModelSpec {
    pub branch: Branch,
    pub covariates: Vec<Covariate>,
    pub subject_filter: SubjectFilter,
}

impl FinalModelSpec {
    pub fn for_branch(branch: Branch) -> Self {
        let (covariates, subject_filter) = match branch {
            Branch::OneArmRetained => (vec![Covariate::PooledFluid, Covariate::B1], SubjectFilter::AssignedDomainA),
            Branch::BothArmsRetained => {
                (vec![Covariate::A1, Covariate::A2, Covariate::B1], SubjectFilter::AssignedDomainA)
            }
            Branch::DomainATerminated => (vec![Covariate::B1], SubjectFilter::AllSubjects),
        };
        Self { branch, covariates, subject_filter }
    }
}

/// Model-ready data: the spec plus outcome counts per covariate pattern
/// (intercept first).
#[derive(Debug, Clone, PartialEq)]
pub struct FinalModel {
    pub spec: FinalModelSpec,
    pub data: GroupedData,
    pub n_subjects: usize,
}

/// Builds the branch's design from the enrolled subjects.
pub fn build_final_model(subjects: &[SubjectRecord], branch: Branch) -> Result<FinalModel, SimError> {
    let spec = FinalModelSpec::for_branch(branch);
    let mut cells: BTreeMap<Vec<u8>, (f64, f64)> = BTreeMap::new();
    let mut n_subjects = 0;
    for s in subjects {
        if spec.subject_filter == SubjectFilter::AssignedDomainA && s.arm_a.is_none() {
            return Err(SimError::Internal(format!(
                "subject {} has no Domain A assignment but the trial path is {branch}",
                s.index
            )));
        }
        let key: Vec<u8> = spec.covariates.iter().map(|c| c.value(s) as u8).collect();
        let cell = cells.entry(key).or_insert((0.0, 0.0));
        cell.0 += 1.0;
        cell.1 += f64::from(s.y21);
        n_subjects += 1;
    }
    let mut patterns = Vec::with_capacity(cells.len());
    let mut trials = Vec::with_capacity(cells.len());
    let mut events = Vec::with_capacity(cells.len());
    for (key, (m, y)) in cells {
        patterns.push(std::iter::once(1.0).chain(key.into_iter().map(f64::from)).collect());
        trials.push(m);
        events.push(y);
    }
    let data = GroupedData::from_counts(patterns, trials, events)
        .map_err(|e| SimError::Internal(format!("no subjects for the final model: {e}")))?;
    Ok(FinalModel { spec, data, n_subjects })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HypothesisId {
    /// Pooled fluid and B1 jointly null.
    OneGlobal,
    /// Pooled fluid null.
    OnePooled,
    /// B1 null (one-arm branch).
    OneB1,
    H01,
    H02,
    H03,
    H04,
    H05,
    H06,
    H07,
    /// B1 null after Domain A termination.
    TerminatedB1,
}

impl HypothesisId {
    pub const BOTH_RETAINED: [HypothesisId; 7] = [
        HypothesisId::H01,
        HypothesisId::H02,
        HypothesisId::H03,
        HypothesisId::H04,
        HypothesisId::H05,
        HypothesisId::H06,
        HypothesisId::H07,
    ];
    pub const ONE_RETAINED: [HypothesisId; 3] = [HypothesisId::OneGlobal, HypothesisId::OnePooled, HypothesisId::OneB1];
    pub const ALL: [HypothesisId; 11] = [
        HypothesisId::OneGlobal,
        HypothesisId::OnePooled,
        HypothesisId::OneB1,
        HypothesisId::H01,
        HypothesisId::H02,
        HypothesisId::H03,
        HypothesisId::H04,
        HypothesisId::H05,
        HypothesisId::H06,
        HypothesisId::H07,
        HypothesisId::TerminatedB1,
    ];

    /// Intersection hypotheses that must all be rejected before this one
    /// may be rejected.
    pub fn ancestors(self) -> &'static [HypothesisId] {
        use HypothesisId::*;
        match self {
            OneGlobal | H01 | TerminatedB1 => &[],
            OnePooled | OneB1 => &[OneGlobal],
            H02 | H03 | H04 => &[H01],
            H05 => &[H01, H02, H03],
            H06 => &[H01, H02, H04],
            H07 => &[H01, H03, H04],
        }
    }

    /// The treatment declared successful when this elementary hypothesis is
    /// rejected.
    pub fn claim(self) -> Option<Treatment> {
        use HypothesisId::*;
        match self {
            OnePooled => Some(Treatment::APooled),
            OneB1 | H07 | TerminatedB1 => Some(Treatment::B1),
            H05 => Some(Treatment::A1),
            H06 => Some(Treatment::A2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        use HypothesisId::*;
        match self {
            OneGlobal => "H1_global",
            OnePooled => "H1_pooled",
            OneB1 => "H1_B1",
            H01 => "H01",
            H02 => "H02",
            H03 => "H03",
            H04 => "H04",
            H05 => "H05",
            H06 => "H06",
            H07 => "H07",
            TerminatedB1 => "HT_B1",
        }
    }
}

impl fmt::Display for HypothesisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatekeepingOutcome {
    pub branch: Branch,
    pub node_p_values: BTreeMap<HypothesisId, f64>,
    pub rejected: BTreeSet<HypothesisId>,
    pub successful_arms: BTreeSet<Treatment>,
}

impl GatekeepingOutcome {
    fn from_rejections(branch: Branch, node_p_values: BTreeMap<HypothesisId, f64>, rejected: BTreeSet<HypothesisId>) -> Self {
        let successful_arms = rejected.iter().filter_map(|h| h.claim()).collect();
        Self { branch, node_p_values, rejected, successful_arms }
    }

    /// Every rejected hypothesis has all of its ancestors rejected.
    pub fn is_monotone(&self) -> bool {
        self.rejected
            .iter()
            .all(|h| h.ancestors().iter().all(|a| self.rejected.contains(a)))
    }
}

/// Gating stage of the both-retained hierarchy: given p-values for
/// H01..H07, which nodes are rejected at `alpha`.
pub fn gate_both_retained(p_values: &[f64; 7], alpha: f64) -> BTreeSet<HypothesisId> {
    let mut rejected = BTreeSet::new();
    for (h, p) in HypothesisId::BOTH_RETAINED.into_iter().zip(p_values) {
        // ancestors precede their descendants in BOTH_RETAINED order
        if *p < alpha && h.ancestors().iter().all(|a| rejected.contains(a)) {
            rejected.insert(h);
        }
    }
    rejected
}

/// Gating stage of the one-retained hierarchy (global, pooled, B1).
pub fn gate_one_retained(p_values: &[f64; 3], alpha: f64) -> BTreeSet<HypothesisId> {
    let mut rejected = BTreeSet::new();
    for (h, p) in HypothesisId::ONE_RETAINED.into_iter().zip(p_values) {
        if *p < alpha && h.ancestors().iter().all(|a| rejected.contains(a)) {
            rejected.insert(h);
        }
    }
    rejected
}

fn converged(fit: LogisticFit, what: &str) -> Result<LogisticFit, StatsError> {
    if fit.converged {
        Ok(fit)
    } else {
        Err(StatsError::FittingFailure(format!(
            "{what} did not converge after {} iterations{}",
            fit.n_iterations,
            if fit.diverging { " (diverging coefficients)" } else { "" }
        )))
    }
}

/// p-value of the LR test that the coefficients in `null_columns` are zero.
fn node_p_value(data: &GroupedData, full: &LogisticFit, null_columns: &[usize]) -> Result<f64, StatsError> {
    let kept: Vec<usize> = (0..data.n_cols()).filter(|c| !null_columns.contains(c)).collect();
    let reduced = converged(fit_grouped(&data.select_columns(&kept))?, "reduced model")?;
    Ok(lr_test(full, &reduced, null_columns.len() as u32)?.p_value)
}

fn fit_full(model: &FinalModel, expected: Branch) -> Result<LogisticFit, StatsError> {
    if model.spec.branch != expected {
        return Err(StatsError::InvalidInput(format!(
            "model built for {} passed to the {expected} analysis",
            model.spec.branch
        )));
    }
    converged(fit_grouped(&model.data)?, "full model")
}

/// Pooled-fluid branch: global 2-df test, then the two 1-df tests.
pub fn gatekeep_one_retained(model: &FinalModel, alpha_final: f64) -> Result<GatekeepingOutcome, StatsError> {
    let full = fit_full(model, Branch::OneArmRetained)?;
    let nulls: [&[usize]; 3] = [&[1, 2], &[1], &[2]];
    let mut p = [1.0; 3];
    for (slot, cols) in p.iter_mut().zip(nulls) {
        *slot = node_p_value(&model.data, &full, cols)?;
    }
    let node_p_values = HypothesisId::ONE_RETAINED.into_iter().zip(p).collect();
    Ok(GatekeepingOutcome::from_rejections(
        Branch::OneArmRetained,
        node_p_values,
        gate_one_retained(&p, alpha_final),
    ))
}

/// Both-retained branch: H01 (3 df), pairwise H02-H04 (2 df), singletons
/// H05-H07 (1 df).
pub fn gatekeep_both_retained(model: &FinalModel, alpha_final: f64) -> Result<GatekeepingOutcome, StatsError> {
    let full = fit_full(model, Branch::BothArmsRetained)?;
    let nulls: [&[usize]; 7] = [&[1, 2, 3], &[1, 2], &[1, 3], &[2, 3], &[1], &[2], &[3]];
    let mut p = [1.0; 7];
    for (slot, cols) in p.iter_mut().zip(nulls) {
        *slot = node_p_value(&model.data, &full, cols)?;
    }
    let node_p_values = HypothesisId::BOTH_RETAINED.into_iter().zip(p).collect();
    Ok(GatekeepingOutcome::from_rejections(
        Branch::BothArmsRetained,
        node_p_values,
        gate_both_retained(&p, alpha_final),
    ))
}

/// Domain A terminated: a single 1-df test of B1.
pub fn analyze_terminated(model: &FinalModel, alpha_final: f64) -> Result<GatekeepingOutcome, StatsError> {
    let full = fit_full(model, Branch::DomainATerminated)?;
    let p = node_p_value(&model.data, &full, &[1])?;
    let mut rejected = BTreeSet::new();
    if p < alpha_final {
        rejected.insert(HypothesisId::TerminatedB1);
    }
    Ok(GatekeepingOutcome::from_rejections(
        Branch::DomainATerminated,
        BTreeMap::from([(HypothesisId::TerminatedB1, p)]),
        rejected,
    ))
}

/// Runs the analysis matching the model's branch.
pub fn analyze(model: &FinalModel, alpha_final: f64) -> Result<GatekeepingOutcome, StatsError> {
    match model.spec.branch {
        Branch::OneArmRetained => gatekeep_one_retained(model, alpha_final),
        Branch::BothArmsRetained => gatekeep_both_retained(model, alpha_final),
        Branch::DomainATerminated => analyze_terminated(model, alpha_final),
    }
}
