//! Fixed CSV schemas for grid results and replicate traces.

use std::io::{Read, Write};

use thiserror::Error;

use crate::final_analysis::HypothesisId;
use crate::sim::CellResult;

/// Column order of `results.csv`.
pub const RESULTS_COLUMNS: [&str; 17] = [
    "scenario_id",
    "n_drop",
    "n_feas",
    "order_first",
    "p_retain_correct",
    "p_retain_both",
    "p_proceed",
    "p_success_A1",
    "p_success_A2",
    "p_success_Apooled",
    "p_success_B1",
    "p_success_A1_B1",
    "p_success_A2_B1",
    "power",
    "fwer",
    "n_effective",
    "n_failed",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: column `{column}`: {reason}")]
    BadValue { row: usize, column: String, reason: String },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario_id: u32,
    pub n_drop: u32,
    pub n_feas: u32,
    pub order_first: String,
    pub p_retain_correct: f64,
    pub p_retain_both: f64,
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
}

impl ResultRow {
    pub fn from_cell(cell: &CellResult) -> Self {
        let oc = &cell.oc;
        Self {
            scenario_id: cell.scenario_id,
            n_drop: cell.n_drop,
            n_feas: cell.n_feas,
            order_first: cell.schedule.first.kind.short_name().to_owned(),
            p_retain_correct: oc.p_retain_correct,
            p_retain_both: oc.p_retain_both,
            p_proceed: oc.p_proceed,
            p_success_a1: oc.p_success_a1,
            p_success_a2: oc.p_success_a2,
            p_success_apooled: oc.p_success_apooled,
            p_success_b1: oc.p_success_b1,
            p_success_a1_b1: oc.p_success_a1_b1,
            p_success_a2_b1: oc.p_success_a2_b1,
            power: oc.power,
            fwer: oc.fwer,
            n_effective: oc.n_effective,
            n_failed: oc.n_failed,
        }
    }

    fn probabilities(&self) -> [f64; 11] {
        [
            self.p_retain_correct,
            self.p_retain_both,
            self.p_proceed,
            self.p_success_a1,
            self.p_success_a2,
            self.p_success_apooled,
            self.p_success_b1,
            self.p_success_a1_b1,
            self.p_success_a2_b1,
            self.power,
            self.fwer,
        ]
    }

    fn fields(&self) -> Vec<String> {
        let mut out = vec![
            self.scenario_id.to_string(),
            self.n_drop.to_string(),
            self.n_feas.to_string(),
            self.order_first.clone(),
        ];
        out.extend(self.probabilities().iter().map(|p| format!("{p:.6}")));
        out.push(self.n_effective.to_string());
        out.push(self.n_failed.to_string());
        out
    }

    /// Value of a metric column by name.
    pub fn metric(&self, column: &str) -> Option<f64> {
        let idx = RESULTS_COLUMNS[4..15].iter().position(|c| *c == column)?;
        Some(self.probabilities()[idx])
    }
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_COLUMNS)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Renders `results.csv` for a set of cells, in the given order.
pub fn results_csv(cells: &[CellResult]) -> String {
    let rows: Vec<ResultRow> = cells.iter().map(ResultRow::from_cell).collect();
    let mut buf = Vec::new();
    write_results(&rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// Parses `results.csv`, checking that every schema column is present.
pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>, ReportError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let mut index = [0usize; 17];
    for (slot, name) in index.iter_mut().zip(RESULTS_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ReportError::MissingColumn(name.to_owned()))?;
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = i + 1;
        let get = |col: usize| -> Result<&str, ReportError> {
            record.get(index[col]).ok_or_else(|| ReportError::BadValue {
                row: row_no,
                column: RESULTS_COLUMNS[col].to_owned(),
                reason: "missing value".into(),
            })
        };
        fn parse<T: std::str::FromStr>(row: usize, col: usize, s: &str) -> Result<T, ReportError>
        where
            T::Err: std::fmt::Display,
        {
            s.trim().parse().map_err(|e: T::Err| ReportError::BadValue {
                row,
                column: RESULTS_COLUMNS[col].to_owned(),
                reason: e.to_string(),
            })
        }
        let prob = |col: usize| -> Result<f64, ReportError> {
            let v: f64 = parse(row_no, col, get(col)?)?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(ReportError::BadValue {
                    row: row_no,
                    column: RESULTS_COLUMNS[col].to_owned(),
                    reason: format!("probability {v} outside [0, 1]"),
                })
            }
        };
        rows.push(ResultRow {
            scenario_id: parse(row_no, 0, get(0)?)?,
            n_drop: parse(row_no, 1, get(1)?)?,
            n_feas: parse(row_no, 2, get(2)?)?,
            order_first: get(3)?.to_owned(),
            p_retain_correct: prob(4)?,
            p_retain_both: prob(5)?,
            p_proceed: prob(6)?,
            p_success_a1: prob(7)?,
            p_success_a2: prob(8)?,
            p_success_apooled: prob(9)?,
            p_success_b1: prob(10)?,
            p_success_a1_b1: prob(11)?,
            p_success_a2_b1: prob(12)?,
            power: prob(13)?,
            fwer: prob(14)?,
            n_effective: parse(row_no, 15, get(15)?)?,
            n_failed: parse(row_no, 16, get(16)?)?,
        });
    }
    Ok(rows)
}

/// Header of the per-replicate trace file.
pub fn trace_columns() -> Vec<String> {
    let mut cols: Vec<String> = [
        "scenario_id",
        "n_drop",
        "n_feas",
        "replicate",
        "seed",
        "order_first",
        "retained",
        "nominated_y11",
        "nominated_y12",
        "used_default",
        "p_drop_y11",
        "p_drop_y12",
        "proceed",
        "p_feas",
        "branch",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    cols.extend(HypothesisId::ALL.iter().map(|h| format!("p_{h}")));
    cols.extend(["successful_arms", "clamp_count", "fit_failure"].map(String::from));
    cols
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes one row per replicate for every cell.
pub fn write_traces<W: Write>(cells: &[CellResult], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_columns())?;
    for cell in cells {
        for (rep, r) in cell.traces.iter().enumerate() {
            let ret = r.retention.as_ref();
            let mut rec = vec![
                cell.scenario_id.to_string(),
                cell.n_drop.to_string(),
                cell.n_feas.to_string(),
                rep.to_string(),
                r.seed.to_string(),
                r.schedule.first.kind.short_name().to_owned(),
                opt(ret.map(|d| d.retained.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"))),
                opt(ret.and_then(|d| d.nominated_by_y11)),
                opt(ret.and_then(|d| d.nominated_by_y12)),
                opt(ret.map(|d| d.used_default)),
                opt(ret.map(|d| format!("{:.6}", d.test_y11.p_value))),
                opt(ret.map(|d| format!("{:.6}", d.test_y12.p_value))),
                opt(r.feasibility.map(|f| f.proceed)),
                opt(r.feasibility.map(|f| format!("{:.6}", f.test.p_value))),
                r.branch.to_string(),
            ];
            for h in HypothesisId::ALL {
                let p = r.gatekeeping.as_ref().and_then(|g| g.node_p_values.get(&h));
                rec.push(opt(p.map(|p| format!("{p:.6}"))));
            }
            rec.push(r.successful_arms.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"));
            rec.push(r.clamp_count.to_string());
            rec.push(r.fit_failure.clone().unwrap_or_default());
            w.write_record(rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
