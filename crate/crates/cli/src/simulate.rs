use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use fastsim_core::report::{results_csv, write_traces};
use fastsim_core::{run_grid_with, CellResult, RunOptions};
use serde::Serialize;

use crate::config::{config_hash, load_scenarios, validate_all};
use crate::error::CliError;

pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub trace: bool,
}

#[derive(Debug, Serialize)]
pub struct ScenarioSummary {
    pub scenario_id: u32,
    pub name: Option<String>,
    pub base_seed: u64,
    pub replicates_per_cell: u64,
    pub cells: usize,
    pub n_effective: u64,
    pub n_failed: u64,
    pub clamp_total: u64,
    pub gating_violations: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_path: String,
    /// SHA-256 of the effective scenarios (after command-line overrides).
    pub config_hash: String,
    pub base_seed: u64,
    pub threads: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    pub n_effective: u64,
    pub n_failed: u64,
    pub clamp_total: u64,
    pub scenarios: Vec<ScenarioSummary>,
}

fn summarize(cells: &[CellResult], config: &fastsim_core::ScenarioConfig) -> ScenarioSummary {
    ScenarioSummary {
        scenario_id: config.scenario_id,
        name: config.name.clone(),
        base_seed: config.base_seed,
        replicates_per_cell: config.replicates,
        cells: cells.len(),
        n_effective: cells.iter().map(|c| c.oc.n_effective).sum(),
        n_failed: cells.iter().map(|c| c.oc.n_failed).sum(),
        clamp_total: cells.iter().map(|c| c.oc.clamp_total).sum(),
        gating_violations: cells.iter().map(|c| c.oc.gating_violations).sum(),
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(CliError::io("cannot write", path))
}

pub fn trace_file_name(scenario_id: u32) -> String {
    format!("trace_scenario_{scenario_id}.csv")
}

pub fn run(args: &SimulateArgs) -> Result<RunManifest, CliError> {
    let started_at = now();
    let mut scenarios = load_scenarios(&args.config)?;
    for s in &mut scenarios {
        if let Some(r) = args.replicates {
            s.replicates = r;
        }
        if let Some(seed) = args.seed {
            s.base_seed = seed;
        }
    }
    validate_all(&args.config, &scenarios)?;
    fs::create_dir_all(&args.out).map_err(CliError::io("cannot create", &args.out))?;

    let options = RunOptions { threads: args.threads, keep_traces: args.trace };
    let mut all_cells = Vec::new();
    let mut summaries = Vec::new();
    for scenario in &scenarios {
        let cells = run_grid_with(scenario, &options)?;
        if args.trace {
            let path = args.out.join(trace_file_name(scenario.scenario_id));
            let file = File::create(&path).map_err(CliError::io("cannot create", &path))?;
            write_traces(&cells, BufWriter::new(file)).map_err(|source| CliError::Output { path, source })?;
        }
        summaries.push(summarize(&cells, scenario));
        // traces are on disk now; keep only the aggregates
        all_cells.extend(cells.into_iter().map(|c| CellResult { traces: Vec::new(), ..c }));
    }

    write_file(&args.out.join("results.csv"), results_csv(&all_cells).as_bytes())?;

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_path: args.config.display().to_string(),
        config_hash: config_hash(&scenarios),
        base_seed: scenarios[0].base_seed,
        threads: args.threads,
        started_at,
        finished_at: now(),
        n_effective: summaries.iter().map(|s| s.n_effective).sum(),
        n_failed: summaries.iter().map(|s| s.n_failed).sum(),
        clamp_total: summaries.iter().map(|s| s.clamp_total).sum(),
        scenarios: summaries,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_file(&args.out.join("manifest.json"), &json)?;
    Ok(manifest)
}
