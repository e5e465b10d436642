//! Experiment campaigns and their reduction to summary rows.
//!
//! UP campaigns time echo round trips; CP campaigns time the two
//! registration procedures. The driver thread is the only clock reader.

mod compare;
mod matrix;

pub use compare::{compare_scenarios, compare_tables, overhead, OverheadReport, Verdict};
pub use matrix::{matrix_scenarios, run_matrix, MatrixEntry, MatrixOptions, MatrixOutcome};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::crypto::aes_acceleration_available;
use crate::links::OpCounts;
use crate::pipeline::{EchoError, Interface, NodeRole, Pipeline, PipelineError, PipelineOptions};
use crate::procedures::{ControlPlane, Procedure, ProcedureError};
use crate::scenario::{Experiment, Scenario, ScenarioError};
use crate::stats::report::{ReportError, SummaryRow};
use crate::stats::{StatsError, StatsSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("repetitions must be at least 1")]
    ZeroRepetitions,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("echo {failed_at} of the campaign failed ({completed} timed samples kept): {source}")]
    Echo {
        failed_at: usize,
        completed: usize,
        partial: Option<StatsSummary>,
        source: EchoError,
    },
    #[error("registration {failed_at} failed ({completed} completed): {source}")]
    Procedure {
        failed_at: usize,
        completed: usize,
        source: ProcedureError,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot compare: {0}")]
    ShapeMismatch(String),
    #[error("scenario {id} is a {got} experiment, expected {want}")]
    WrongExperiment { id: String, got: &'static str, want: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpReport {
    pub scenario_id: String,
    pub payload_size: usize,
    pub summary: StatsSummary,
    pub samples_ns: Vec<u64>,
    /// Operations per round trip, by node (identical for every echo).
    pub ops_per_rtt: Vec<(NodeRole, OpCounts)>,
}

impl UpReport {
    pub fn ops_total(&self) -> OpCounts {
        self.ops_per_rtt.iter().map(|(_, o)| *o).sum()
    }

    pub fn row(&self) -> SummaryRow {
        let ops = self.ops_total();
        SummaryRow::new(
            &self.scenario_id,
            Experiment::UpEcho.as_str(),
            self.payload_size,
            &self.summary,
            ops.total(),
            ops.esp,
            aes_acceleration_available(),
        )
    }
}

/// The payload every echo in a campaign carries.
pub fn campaign_payload(size: usize, seed: u64) -> Vec<u8> {
    let mut p = vec![0u8; size];
    ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut p);
    p
}

pub fn run_up_experiment(sc: &Scenario) -> Result<UpReport, HarnessError> {
    if sc.experiment != Experiment::UpEcho {
        return Err(HarnessError::WrongExperiment {
            id: sc.id.clone(),
            got: sc.experiment.as_str(),
            want: Experiment::UpEcho.as_str(),
        });
    }
    if sc.repetitions == 0 {
        return Err(HarnessError::ZeroRepetitions);
    }
    let mut p = Pipeline::build(
        &sc.topology()?,
        PipelineOptions {
            execution: sc.execution,
            ..Default::default()
        },
    )?;
    up_campaign(&mut p, sc)
}

/// Runs warmup and timed echoes of a campaign on an already built pipeline.
pub fn up_campaign(p: &mut Pipeline, sc: &Scenario) -> Result<UpReport, HarnessError> {
    if sc.repetitions == 0 {
        return Err(HarnessError::ZeroRepetitions);
    }
    let payload = campaign_payload(sc.payload_size, sc.seed);
    let fail = |i: usize, samples: &[u64], source| HarnessError::Echo {
        failed_at: i,
        completed: samples.len(),
        partial: StatsSummary::from_nanos(samples).ok(),
        source,
    };
    for i in 0..sc.warmup {
        p.send_echo(&payload).map_err(|e| fail(i, &[], e))?;
    }
    let mut samples = Vec::with_capacity(sc.repetitions);
    let mut ops = None;
    for i in 0..sc.repetitions {
        let r = p.send_echo(&payload).map_err(|e| fail(sc.warmup + i, &samples, e))?;
        samples.push(r.rtt.as_nanos() as u64);
        ops.get_or_insert(r.ops);
    }
    Ok(UpReport {
        scenario_id: sc.id.clone(),
        payload_size: sc.payload_size,
        summary: StatsSummary::from_nanos(&samples)?,
        samples_ns: samples,
        ops_per_rtt: ops.unwrap_or_default(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureReport {
    pub procedure: Procedure,
    pub link: Interface,
    pub summary: StatsSummary,
    pub samples_ns: Vec<u64>,
    /// Request and response sizes on the wire.
    pub wire_lengths: Vec<usize>,
    /// Crypto operations per procedure run on its link, both ends.
    pub ops_per_run: OpCounts,
    /// Plain request size, used as the payload column.
    pub request_bytes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpReport {
    pub scenario_id: String,
    pub ue_context: ProcedureReport,
    pub bearer_context: ProcedureReport,
}

impl CpReport {
    pub fn row_id(scenario_id: &str, p: Procedure) -> String {
        format!("{scenario_id}#{}", p.as_str())
    }

    pub fn rows(&self) -> Vec<SummaryRow> {
        [&self.ue_context, &self.bearer_context]
            .into_iter()
            .map(|r| {
                SummaryRow::new(
                    Self::row_id(&self.scenario_id, r.procedure),
                    Experiment::CpProcedures.as_str(),
                    r.request_bytes,
                    &r.summary,
                    r.ops_per_run.total(),
                    r.ops_per_run.esp,
                    aes_acceleration_available(),
                )
            })
            .collect()
    }

    pub fn procedure(&self, p: Procedure) -> &ProcedureReport {
        match p {
            Procedure::UeContextSetup => &self.ue_context,
            Procedure::BearerContextSetup => &self.bearer_context,
        }
    }
}

pub fn run_cp_experiment(sc: &Scenario) -> Result<CpReport, HarnessError> {
    if sc.experiment != Experiment::CpProcedures {
        return Err(HarnessError::WrongExperiment {
            id: sc.id.clone(),
            got: sc.experiment.as_str(),
            want: Experiment::CpProcedures.as_str(),
        });
    }
    if sc.repetitions == 0 {
        return Err(HarnessError::ZeroRepetitions);
    }
    let mut cp = ControlPlane::build(&sc.topology()?, sc.execution).map_err(|source| HarnessError::Procedure {
        failed_at: 0,
        completed: 0,
        source,
    })?;
    let fail = |i: usize, completed: usize| move |source| HarnessError::Procedure {
        failed_at: i,
        completed,
        source,
    };
    for i in 0..sc.warmup {
        cp.run_registration_sequence().map_err(fail(i, 0))?;
    }
    let ops_before = cp.link_ops();
    let (mut ue, mut bearer) = (Vec::with_capacity(sc.repetitions), Vec::with_capacity(sc.repetitions));
    let mut last = None;
    for i in 0..sc.repetitions {
        let r = cp.run_registration_sequence().map_err(fail(sc.warmup + i, ue.len()))?;
        ue.push(r.ue_context.duration.as_nanos() as u64);
        bearer.push(r.bearer_context.duration.as_nanos() as u64);
        last = Some(r);
    }
    let last = last.expect("at least one repetition");
    let ops_after = cp.link_ops();
    let per_run = |k: usize| {
        let (a, b) = (ops_after[k].1, ops_before[k].1);
        let n = sc.repetitions as u64;
        OpCounts {
            esp: (a.esp - b.esp) / n,
            dtls: (a.dtls - b.dtls) / n,
            pdcp_integrity: 0,
            pdcp_cipher: 0,
        }
    };
    let report = |t: &crate::procedures::ProcedureTranscript, samples: Vec<u64>, k: usize| -> Result<ProcedureReport, HarnessError> {
        Ok(ProcedureReport {
            procedure: t.procedure,
            link: t.link,
            summary: StatsSummary::from_nanos(&samples)?,
            samples_ns: samples,
            wire_lengths: t.wire_lengths(),
            ops_per_run: per_run(k),
            request_bytes: crate::procedures::encode_message(&t.entries[0].message).len(),
        })
    };
    Ok(CpReport {
        scenario_id: sc.id.clone(),
        ue_context: report(&last.ue_context, ue, 0)?,
        bearer_context: report(&last.bearer_context, bearer, 1)?,
    })
}
