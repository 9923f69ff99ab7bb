//! CSV reports: the cost table, prefilter decisions, rollout traces and GA
//! convergence traces.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stateselect_core::cost::RolloutTrace;
use stateselect_core::ga::GaTracePoint;
use stateselect_core::prefilter::PrefilterReport;
use stateselect_core::selection::SelectionResult;

use crate::error::{Error, Result};

pub const COST_TABLE_FILE: &str = "cost_table.csv";
pub const PREFILTER_FILE: &str = "prefilter.csv";

/// Writes `header` followed by `rows`; the header is present even when
/// there are no rows.
pub fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::format(path, e))?;
    w.write_record(header).map_err(|e| Error::format(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::format(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| Error::format(path, e))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub cap: usize,
    pub method: String,
    pub selected_count: usize,
    pub j_train: f64,
    pub j_test: f64,
    pub j_train_state: f64,
    pub j_train_output: f64,
    pub j_test_state: f64,
    pub j_test_output: f64,
    /// Selected channel names joined by `;`.
    pub selected: String,
}

pub const COST_HEADER: [&str; 10] = [
    "cap",
    "method",
    "selected_count",
    "j_train",
    "j_test",
    "j_train_state",
    "j_train_output",
    "j_test_state",
    "j_test_output",
    "selected",
];

impl From<&SelectionResult> for CostRow {
    fn from(r: &SelectionResult) -> Self {
        CostRow {
            cap: r.max_states,
            method: r.method.as_str().into(),
            selected_count: r.indices.len(),
            j_train: r.j_train.j,
            j_test: r.j_test.j,
            j_train_state: r.j_train.j_state,
            j_train_output: r.j_train.j_output,
            j_test_state: r.j_test.j_state,
            j_test_output: r.j_test.j_output,
            selected: r.names.join(";"),
        }
    }
}

pub fn write_cost_table(path: &Path, results: &[SelectionResult]) -> Result<()> {
    let rows: Vec<CostRow> = results.iter().map(CostRow::from).collect();
    write_rows(path, &COST_HEADER, &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefilterRow {
    pub index: usize,
    pub name: String,
    pub decision: String,
    pub reason: String,
    pub evidence: Option<f64>,
    /// Most correlated input, or the representative a duplicate collapsed into.
    pub related: String,
}

pub const PREFILTER_HEADER: [&str; 6] = ["index", "name", "decision", "reason", "evidence", "related"];

/// One row per examined candidate, in channel order.
pub fn prefilter_rows(report: &PrefilterReport, names: &[String]) -> Vec<PrefilterRow> {
    let mut rows: Vec<PrefilterRow> = report
        .kept
        .iter()
        .map(|&i| PrefilterRow {
            index: i,
            name: names[i].clone(),
            decision: "kept".into(),
            reason: String::new(),
            evidence: None,
            related: String::new(),
        })
        .chain(report.removed.iter().map(|r| PrefilterRow {
            index: r.index,
            name: names[r.index].clone(),
            decision: "removed".into(),
            reason: r.reason.as_str().into(),
            evidence: Some(r.evidence),
            related: r.related.map(|j| names[j].clone()).unwrap_or_default(),
        }))
        .collect();
    rows.sort_by_key(|r| r.index);
    rows
}

pub fn write_prefilter(path: &Path, report: &PrefilterReport, names: &[String]) -> Result<()> {
    write_rows(path, &PREFILTER_HEADER, &prefilter_rows(report, names))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub split: String,
    pub realization: usize,
    pub step: usize,
    pub channel: String,
    pub role: String,
    pub predicted: f64,
    pub truth: f64,
}

pub const TRACE_HEADER: [&str; 7] = ["split", "realization", "step", "channel", "role", "predicted", "truth"];

/// Flattens a rollout into rows; `step` counts from 1 within each
/// realization (step 0 is the initial state).
pub fn trace_rows(split: &str, trace: &RolloutTrace, state_names: &[String], output_names: &[String]) -> Vec<TraceRow> {
    let mut rows = Vec::new();
    let mut col = 0;
    for (r, &len) in trace.lengths.iter().enumerate() {
        for k in 0..len {
            let c = col + k;
            for (i, name) in state_names.iter().enumerate() {
                rows.push(TraceRow {
                    split: split.into(),
                    realization: r,
                    step: k + 1,
                    channel: name.clone(),
                    role: "state".into(),
                    predicted: trace.pred_x[(i, c)],
                    truth: trace.true_x[(i, c)],
                });
            }
            for (i, name) in output_names.iter().enumerate() {
                rows.push(TraceRow {
                    split: split.into(),
                    realization: r,
                    step: k + 1,
                    channel: name.clone(),
                    role: "output".into(),
                    predicted: trace.pred_y[(i, c)],
                    truth: trace.true_y[(i, c)],
                });
            }
        }
        col += len;
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaTraceRow {
    pub restart: usize,
    pub generation: usize,
    pub best_j: f64,
}

pub const GA_TRACE_HEADER: [&str; 3] = ["restart", "generation", "best_j"];

pub fn write_ga_trace(path: &Path, trace: &[GaTracePoint]) -> Result<()> {
    let rows: Vec<GaTraceRow> = trace
        .iter()
        .map(|t| GaTraceRow {
            restart: t.restart,
            generation: t.generation,
            best_j: t.best_j,
        })
        .collect();
    write_rows(path, &GA_TRACE_HEADER, &rows)
}

/// Fixed-width text rendering of a cost table.
pub fn summarize(rows: &[CostRow]) -> String {
    let mut out = format!(
        "{:>4}  {:<10} {:>5}  {:>12}  {:>12}  selected\n",
        "cap", "method", "count", "J_train", "J_test"
    );
    let mut sorted: Vec<&CostRow> = rows.iter().collect();
    sorted.sort_by(|a, b| (a.cap, &a.method).cmp(&(b.cap, &b.method)));
    for r in sorted {
        out += &format!(
            "{:>4}  {:<10} {:>5}  {:>12.4e}  {:>12.4e}  {}\n",
            r.cap,
            r.method,
            r.selected_count,
            r.j_train,
            r.j_test,
            r.selected.replace(';', ", ")
        );
    }
    out
}
