use std::collections::BTreeSet;
use std::path::Path;

use super::{run_cp_experiment, run_up_experiment, HarnessError};
use crate::pipeline::{Execution, Interface};
use crate::scenario::{
    Scenario, ScenarioSources, DEFAULT_CP_REPETITIONS, DEFAULT_PAYLOAD, DEFAULT_UP_REPETITIONS, DEFAULT_WARMUP,
};
use crate::stats::report::{append_summary, read_summaries_from, SummaryRow};

/// Interfaces swept by the matrix, with their experiment.
pub const MATRIX_INTERFACES: [(Interface, &str); 3] = [
    (Interface::F1U, "up-echo"),
    (Interface::F1C, "cp-procedures"),
    (Interface::E1, "cp-procedures"),
];

#[derive(Debug, Clone)]
pub struct MatrixOptions {
    pub up_repetitions: usize,
    pub cp_repetitions: usize,
    pub payload_size: usize,
    pub warmup: usize,
    pub execution: Execution,
    pub seed: u64,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        MatrixOptions {
            up_repetitions: DEFAULT_UP_REPETITIONS,
            cp_repetitions: DEFAULT_CP_REPETITIONS,
            payload_size: DEFAULT_PAYLOAD,
            warmup: DEFAULT_WARMUP,
            execution: Execution::Deterministic,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixEntry {
    /// `matrix/<interface>/<suite or baseline>`.
    pub id: String,
    pub interface: Interface,
    pub scenario: Scenario,
}

/// One baseline plus one entry per valid suite for every swept interface.
/// Only the interface under test is secured.
pub fn matrix_scenarios(opts: &MatrixOptions) -> Result<Vec<MatrixEntry>, HarnessError> {
    let mut out = Vec::new();
    for (iface, experiment) in MATRIX_INTERFACES {
        let reps = if experiment == "up-echo" {
            opts.up_repetitions
        } else {
            opts.cp_repetitions
        };
        let labels = std::iter::once(None).chain(iface.valid_suites().into_iter().map(Some));
        for suite in labels {
            let id = format!("matrix/{iface}/{}", suite.map_or("baseline", |s| s.as_str()));
            let mut src = ScenarioSources::default();
            let f = &mut src.flags;
            f.insert("experiment".into(), experiment.into());
            f.insert("mode".into(), "disaggregated".into());
            f.insert("repetitions".into(), reps.to_string());
            f.insert("payload_size".into(), opts.payload_size.to_string());
            f.insert("warmup".into(), opts.warmup.to_string());
            f.insert("seed".into(), opts.seed.to_string());
            f.insert("execution".into(), opts.execution.as_str().into());
            if let Some(s) = suite {
                f.insert(format!("links.{iface}.security"), s.as_str().into());
            }
            let mut scenario = src.resolve()?;
            scenario.id = id.clone();
            out.push(MatrixEntry {
                id,
                interface: iface,
                scenario,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct MatrixOutcome {
    pub rows: Vec<SummaryRow>,
    /// Entries already present in the output file.
    pub skipped: Vec<String>,
}

fn rows_for(e: &MatrixEntry) -> Result<Vec<SummaryRow>, HarnessError> {
    Ok(if e.interface == Interface::F1U {
        vec![run_up_experiment(&e.scenario)?.row()]
    } else {
        run_cp_experiment(&e.scenario)?.rows()
    })
}

/// Runs every entry, appending rows to `out` as each finishes. Entries whose
/// rows are already in `out` are skipped, so an interrupted run can resume.
pub fn run_matrix(
    entries: &[MatrixEntry],
    out: &Path,
    mut progress: impl FnMut(&MatrixEntry),
) -> Result<MatrixOutcome, HarnessError> {
    let done: BTreeSet<String> = match std::fs::metadata(out) {
        Ok(m) if m.len() > 0 => read_summaries_from(out)?
            .into_iter()
            .map(|r| r.scenario_id.split('#').next().unwrap_or_default().to_string())
            .collect(),
        _ => BTreeSet::new(),
    };
    let mut outcome = MatrixOutcome::default();
    for e in entries {
        if done.contains(&e.id) {
            outcome.skipped.push(e.id.clone());
            continue;
        }
        progress(e);
        for r in rows_for(e)? {
            append_summary(out, &r)?;
            outcome.rows.push(r);
        }
    }
    Ok(outcome)
}
