//! Monte Carlo engine for seamless Phase II/III factorial adaptive
//! multi-arm multi-stage (FAST) trials.
//!
//! A replicate enrolls virtual subjects into a 3x2 factorial (fluid domain A
//! with arms A0/A1/A2, domain B with B0/B1), runs an arm-dropping analysis and
//! a feasibility analysis on the Phase II biomarkers at configurable sample
//! sizes, and finishes with a gatekept logistic-regression analysis of the
//! binary Phase III outcome. [`sim`] sweeps the interim timings and
//! aggregates operating characteristics.

pub mod error;
pub mod final_analysis;
pub mod generator;
pub mod interim;
pub mod model;
pub mod report;
pub mod sim;
pub mod stats;

pub use error::{FieldIssue, Result, SimError, StatsError, ValidationErrors};
pub use final_analysis::{Branch, GatekeepingOutcome, HypothesisId};
pub use model::{Arm, ArmA, ArmB, Direction, ScenarioConfig, SubjectRecord, Treatment};
pub use sim::{run_cell, run_cell_with, run_grid, run_grid_with, run_replicate, CellResult, OperatingCharacteristics, RunOptions, TrialResult};
