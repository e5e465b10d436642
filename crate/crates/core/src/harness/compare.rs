use std::fmt;

use super::HarnessError;
use crate::stats::report::SummaryRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The two 99% intervals overlap.
    Overlapping,
    Distinguishable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Overlapping => "overlapping",
            Verdict::Distinguishable => "distinguishable",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Secured minus baseline, in microseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct OverheadReport {
    pub baseline_id: String,
    pub secured_id: String,
    pub delta_mean_us: f64,
    pub delta_pct: f64,
    pub delta_ci_low_us: f64,
    pub delta_ci_high_us: f64,
    pub verdict: Verdict,
}

impl fmt::Display for OverheadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vs {}: {:+.3} us ({:+.2}%), 99% CI [{:+.3}, {:+.3}] us, {}",
            self.secured_id,
            self.baseline_id,
            self.delta_mean_us,
            self.delta_pct,
            self.delta_ci_low_us,
            self.delta_ci_high_us,
            self.verdict
        )
    }
}

/// Overhead of `secured` over `baseline` from the summary fields alone.
pub fn overhead(baseline: &SummaryRow, secured: &SummaryRow) -> OverheadReport {
    let delta = secured.mean_us - baseline.mean_us;
    let overlap = secured.ci_low_us <= baseline.ci_high_us && baseline.ci_low_us <= secured.ci_high_us;
    OverheadReport {
        baseline_id: baseline.scenario_id.clone(),
        secured_id: secured.scenario_id.clone(),
        delta_mean_us: delta,
        delta_pct: 100.0 * delta / baseline.mean_us,
        delta_ci_low_us: secured.ci_low_us - baseline.ci_high_us,
        delta_ci_high_us: secured.ci_high_us - baseline.ci_low_us,
        verdict: if overlap {
            Verdict::Overlapping
        } else {
            Verdict::Distinguishable
        },
    }
}

/// Like [`overhead`], but refuses rows that were not measured the same way.
pub fn compare_scenarios(baseline: &SummaryRow, secured: &SummaryRow) -> Result<OverheadReport, HarnessError> {
    let mut diffs = Vec::new();
    if baseline.experiment != secured.experiment {
        diffs.push(format!("experiment {} vs {}", baseline.experiment, secured.experiment));
    }
    if baseline.n != secured.n {
        diffs.push(format!("n {} vs {}", baseline.n, secured.n));
    }
    if baseline.payload_bytes != secured.payload_bytes {
        diffs.push(format!("payload {} vs {} bytes", baseline.payload_bytes, secured.payload_bytes));
    }
    if !diffs.is_empty() {
        return Err(HarnessError::ShapeMismatch(format!(
            "{} and {} differ: {}",
            baseline.scenario_id,
            secured.scenario_id,
            diffs.join(", ")
        )));
    }
    Ok(overhead(baseline, secured))
}

/// Pairs rows by scenario id when every id matches, otherwise by position.
pub fn compare_tables(baseline: &[SummaryRow], secured: &[SummaryRow]) -> Result<Vec<OverheadReport>, HarnessError> {
    let by_id: Option<Vec<(&SummaryRow, &SummaryRow)>> = secured
        .iter()
        .map(|s| baseline.iter().find(|b| b.scenario_id == s.scenario_id).map(|b| (b, s)))
        .collect();
    let pairs = match by_id {
        Some(p) if !p.is_empty() => p,
        _ => {
            if baseline.len() != secured.len() {
                return Err(HarnessError::ShapeMismatch(format!(
                    "{} baseline rows vs {} secured rows",
                    baseline.len(),
                    secured.len()
                )));
            }
            baseline.iter().zip(secured).collect()
        }
    };
    pairs.into_iter().map(|(b, s)| compare_scenarios(b, s)).collect()
}
