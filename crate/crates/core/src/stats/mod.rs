//! Descriptive statistics, confidence intervals and least-squares fits
//! shared by the latency harness and the crypto benchmark.

pub mod report;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Two-sided 99% standard-normal quantile.
pub const Z99: f64 = 2.5758293035489004;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Two-sided standard-normal quantile for a confidence level in (0, 1).
pub fn z_for_level(level: f64) -> Result<f64, StatsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidArgument(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    if level == 0.99 {
        return Ok(Z99);
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(n.inverse_cdf(0.5 + level / 2.0))
}

pub fn mean(samples: &[f64]) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Sample standard deviation (n - 1 divisor); 0 for a single sample.
pub fn std_dev(samples: &[f64]) -> Result<f64, StatsError> {
    let m = mean(samples)?;
    if samples.len() < 2 {
        return Ok(0.0);
    }
    let ss: f64 = samples.iter().map(|x| (x - m) * (x - m)).sum();
    Ok((ss / (samples.len() - 1) as f64).sqrt())
}

/// `mean ± z·s/√n`. With one sample the interval collapses to the mean.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64, f64), StatsError> {
    let z = z_for_level(level)?;
    let m = mean(samples)?;
    if samples.len() == 1 {
        return Ok((m, m, m));
    }
    let half = z * std_dev(samples)? / (samples.len() as f64).sqrt();
    Ok((m, m - half, m + half))
}

/// Nearest-rank percentile: the value at 1-based rank `ceil(q/100 · n)`,
/// with rank clamped to `[1, n]`. No interpolation; ties need no rule since
/// the result is always a sample value.
pub fn percentile(samples: &[f64], q: f64) -> Result<f64, StatsError> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

pub fn percentile_sorted(sorted: &[f64], q: f64) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(StatsError::InvalidArgument(format!("percentile {q} outside [0, 100]")));
    }
    let n = sorted.len();
    let rank = ((q / 100.0) * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// Aggregate of one campaign, all values in microseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsSummary {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub ci99_low: f64,
    pub ci99_high: f64,
    pub min: f64,
    pub max: f64,
    pub p50: f64,
    pub p99: f64,
}

impl StatsSummary {
    pub fn from_micros(samples: &[f64]) -> Result<Self, StatsError> {
        let (mean, lo, hi) = confidence_interval(samples, 0.99)?;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(StatsSummary {
            n: samples.len(),
            mean,
            std_dev: std_dev(samples)?,
            ci99_low: lo,
            ci99_high: hi,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            p50: percentile_sorted(&sorted, 50.0)?,
            p99: percentile_sorted(&sorted, 99.0)?,
        })
    }

    pub fn from_nanos(samples_ns: &[u64]) -> Result<Self, StatsError> {
        let us: Vec<f64> = samples_ns.iter().map(|&ns| ns as f64 / 1000.0).collect();
        Self::from_micros(&us)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit, StatsError> {
    if points.len() < 3 {
        return Err(StatsError::Degenerate(format!(
            "linear fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || !sxx.is_finite() {
        return Err(StatsError::Degenerate("x values are constant".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}
