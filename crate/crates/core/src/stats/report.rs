//! CSV serialization for campaign summaries, raw samples and bench curves.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::StatsSummary;

pub const SUMMARY_COLUMNS: [&str; 15] = [
    "scenario_id",
    "experiment",
    "n",
    "payload_bytes",
    "mean_us",
    "std_us",
    "ci_low_us",
    "ci_high_us",
    "min_us",
    "max_us",
    "p50_us",
    "p99_us",
    "crypto_ops",
    "esp_ops",
    "accel",
];

pub const BENCH_COLUMNS: [&str; 5] = ["suite", "size_bytes", "runtime_s", "throughput_Bps", "accel"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: missing column {0:?}")]
    MissingColumn(String),
    #[error("schema error: unexpected column {0:?}")]
    UnexpectedColumn(String),
    #[error("bad sample on line {line}: {text:?}")]
    BadSample { line: usize, text: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One row per scenario (or per procedure for control-plane campaigns).
/// `crypto_ops` and `esp_ops` count primitive invocations per repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario_id: String,
    pub experiment: String,
    pub n: usize,
    pub payload_bytes: usize,
    pub mean_us: f64,
    pub std_us: f64,
    pub ci_low_us: f64,
    pub ci_high_us: f64,
    pub min_us: f64,
    pub max_us: f64,
    pub p50_us: f64,
    pub p99_us: f64,
    pub crypto_ops: u64,
    pub esp_ops: u64,
    pub accel: bool,
}

impl SummaryRow {
    pub fn new(
        scenario_id: impl Into<String>,
        experiment: impl Into<String>,
        payload_bytes: usize,
        s: &StatsSummary,
        crypto_ops: u64,
        esp_ops: u64,
        accel: bool,
    ) -> Self {
        SummaryRow {
            scenario_id: scenario_id.into(),
            experiment: experiment.into(),
            n: s.n,
            payload_bytes,
            mean_us: s.mean,
            std_us: s.std_dev,
            ci_low_us: s.ci99_low,
            ci_high_us: s.ci99_high,
            min_us: s.min,
            max_us: s.max,
            p50_us: s.p50,
            p99_us: s.p99,
            crypto_ops,
            esp_ops,
            accel,
        }
    }

    pub fn summary(&self) -> StatsSummary {
        StatsSummary {
            n: self.n,
            mean: self.mean_us,
            std_dev: self.std_us,
            ci99_low: self.ci_low_us,
            ci99_high: self.ci_high_us,
            min: self.min_us,
            max: self.max_us,
            p50: self.p50_us,
            p99: self.p99_us,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub suite: String,
    pub size_bytes: u64,
    pub runtime_s: f64,
    #[serde(rename = "throughput_Bps")]
    pub throughput_bps: f64,
    pub accel: bool,
}

pub fn write_rows<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_rows_to<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ReportError> {
    let f = File::create(path).map_err(io_err(path))?;
    write_rows(BufWriter::new(f), rows)
}

/// Appends one summary row, writing the header first if the file is new or empty.
pub fn append_summary(path: &Path, row: &SummaryRow) -> Result<(), ReportError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(f);
    w.serialize(row)?;
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<(), ReportError> {
    for col in expected {
        if !headers.iter().any(|h| h == *col) {
            return Err(ReportError::MissingColumn(col.to_string()));
        }
    }
    if let Some(extra) = headers.iter().find(|h| !expected.contains(h)) {
        return Err(ReportError::UnexpectedColumn(extra.to_string()));
    }
    Ok(())
}

pub fn read_summaries<R: io::Read>(input: R) -> Result<Vec<SummaryRow>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    check_header(r.headers()?, &SUMMARY_COLUMNS)?;
    r.deserialize().map(|row| row.map_err(ReportError::from)).collect()
}

pub fn read_summaries_from(path: &Path) -> Result<Vec<SummaryRow>, ReportError> {
    read_summaries(File::open(path).map_err(io_err(path))?)
}

pub fn read_bench<R: io::Read>(input: R) -> Result<Vec<BenchRow>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    check_header(r.headers()?, &BENCH_COLUMNS)?;
    r.deserialize().map(|row| row.map_err(ReportError::from)).collect()
}

/// Raw samples: one duration in nanoseconds per line.
pub fn write_samples(path: &Path, samples_ns: &[u64]) -> Result<(), ReportError> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    for s in samples_ns {
        writeln!(w, "{s}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_samples(path: &Path) -> Result<Vec<u64>, ReportError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse().map_err(|_| ReportError::BadSample {
            line: i + 1,
            text: line.clone(),
        })?);
    }
    Ok(out)
}
