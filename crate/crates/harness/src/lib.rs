//! Experiment runner for the `nearmin-core` constructions: deterministic
//! corpora, per-suite CSV results, recorded baselines and row replay.

pub mod baselines;
pub mod config;
pub mod corpus;
pub mod report;
pub mod suites;

use std::path::Path;

use anyhow::{bail, Result};

use config::ExperimentConfig;
use suites::{run_suite, summarize, Suite, Summary, Table, Value};

pub const REPLAY_TOLERANCE: f64 = 1e-12;

pub fn run(cfg: &ExperimentConfig, suites: &[Suite]) -> Result<Vec<(Table, Summary)>> {
    suites
        .iter()
        .map(|&suite| {
            let table = run_suite(suite, cfg)?;
            let summary = summarize(&table);
            Ok((table, summary))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub row: usize,
    pub column: String,
    pub recorded: String,
    pub recomputed: String,
}

/// Recomputes the rows of one case and compares them with a results CSV.
/// Returns the number of rows compared and every mismatching field.
pub fn replay(cfg: &ExperimentConfig, suite: Suite, id: u64, csv: &Path) -> Result<(usize, Vec<Mismatch>)> {
    let (header, records) = report::read_csv(csv)?;
    if header != suite.columns() {
        bail!("{} does not hold {} results", csv.display(), suite.name());
    }
    let recorded: Vec<&Vec<String>> = records.iter().filter(|r| r[0] == id.to_string()).collect();
    if recorded.is_empty() {
        bail!("case {id} not found in {}", csv.display());
    }
    let fresh = suite.run_case(cfg, id)?;
    if fresh.len() != recorded.len() {
        bail!("case {id}: {} rows recorded, {} recomputed", recorded.len(), fresh.len());
    }
    let mut mismatches = Vec::new();
    for (i, (old, new)) in recorded.iter().zip(&fresh).enumerate() {
        for ((text, value), column) in old.iter().zip(new).zip(suite.columns()) {
            let same = value.parse_like(text).map(|v| v.close_to(value, REPLAY_TOLERANCE)).unwrap_or(false);
            if !same {
                mismatches.push(Mismatch {
                    row: i,
                    column: column.to_string(),
                    recorded: text.clone(),
                    recomputed: Value::to_string(value),
                });
            }
        }
    }
    Ok((fresh.len(), mismatches))
}
