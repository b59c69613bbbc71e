//! Posterior summaries: moments, Monte Carlo standard errors, quantiles and
//! kernel density estimates.

use std::fmt;

use crate::error::{ErgmError, Result};
use crate::exchange::PosteriorSample;

pub const SUMMARY_PROBS: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub label: String,
    pub mean: f64,
    pub sd: f64,
    pub naive_se: f64,
    /// Batch-means standard error; NaN with fewer than four draws.
    pub ts_se: f64,
    /// At [`SUMMARY_PROBS`].
    pub quantiles: [f64; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub params: Vec<ParamSummary>,
    pub draws: usize,
    pub acceptance_rate: Option<f64>,
}

/// `sd / sqrt(n)`.
pub fn naive_se(sd: f64, n: usize) -> f64 {
    sd / (n as f64).sqrt()
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Standard error of the mean from `⌊√n⌋` consecutive batches of equal
/// size; trailing draws that do not fill a batch are dropped.
pub fn batch_means_se(values: &[f64]) -> f64 {
    let batches = (values.len() as f64).sqrt().floor() as usize;
    if batches < 2 {
        return f64::NAN;
    }
    let size = values.len() / batches;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let (_, sd) = mean_sd(&means);
    sd / (batches as f64).sqrt()
}

/// Quantile of sorted data with linear interpolation between order
/// statistics at position `p (n - 1)`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn summarize_values(label: &str, values: &[f64]) -> Result<ParamSummary> {
    if values.is_empty() {
        return Err(ErgmError::EmptySample);
    }
    let (mean, sd) = mean_sd(values);
    let sorted = sorted_copy(values);
    Ok(ParamSummary {
        label: label.to_string(),
        mean,
        sd,
        naive_se: naive_se(sd, values.len()),
        ts_se: batch_means_se(values),
        quantiles: SUMMARY_PROBS.map(|p| quantile(&sorted, p)),
    })
}

/// Summarizes every parameter over the pooled chains. `labels` name the
/// model terms and are rendered as `theta{k} (label)`, or `theta{k}` when
/// empty.
pub fn summarize(sample: &PosteriorSample, labels: &[String]) -> Result<SummaryTable> {
    if sample.is_empty() {
        return Err(ErgmError::EmptySample);
    }
    if labels.len() != sample.dim() {
        return Err(ErgmError::DimensionMismatch {
            expected: sample.dim(),
            found: labels.len(),
        });
    }
    let params = labels
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let name = if label.is_empty() {
                format!("theta{}", k + 1)
            } else {
                format!("theta{} ({label})", k + 1)
            };
            summarize_values(&name, &sample.pooled().column(k))
        })
        .collect::<Result<_>>()?;
    Ok(SummaryTable {
        params,
        draws: sample.len(),
        acceptance_rate: sample.acceptance_rate(),
    })
}

impl fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.params.iter().map(|p| p.label.len()).max().unwrap_or(0);
        write!(f, "{:width$}", "")?;
        for head in ["Mean", "SD", "Naive SE", "Time-series SE"] {
            write!(f, " {head:>14}")?;
        }
        writeln!(f)?;
        for p in &self.params {
            write!(f, "{:width$}", p.label)?;
            for v in [p.mean, p.sd, p.naive_se, p.ts_se] {
                write!(f, " {v:>14.7}")?;
            }
            writeln!(f)?;
        }
        writeln!(f)?;
        write!(f, "{:width$}", "")?;
        for head in ["2.5%", "25%", "50%", "75%", "97.5%"] {
            write!(f, " {head:>11}")?;
        }
        writeln!(f)?;
        for p in &self.params {
            write!(f, "{:width$}", p.label)?;
            for v in p.quantiles {
                write!(f, " {v:>11.7}")?;
            }
            writeln!(f)?;
        }
        if let Some(rate) = self.acceptance_rate {
            writeln!(f)?;
            writeln!(f, "Acceptance rate: {rate:.7}")?;
        }
        Ok(())
    }
}

/// Gaussian kernel density estimate with Silverman's rule-of-thumb
/// bandwidth, evaluated at `points` evenly spaced abscissae spanning the
/// data plus three bandwidths on either side. Empty when the bandwidth is
/// zero (constant data).
pub fn kde(values: &[f64], points: usize) -> Vec<(f64, f64)> {
    if values.len() < 2 || points < 2 {
        return Vec::new();
    }
    let sorted = sorted_copy(values);
    let (_, sd) = mean_sd(values);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bandwidth = 0.9 * spread * (values.len() as f64).powf(-0.2);
    if !(bandwidth > 0.0) {
        return Vec::new();
    }
    let lo = sorted[0] - 3.0 * bandwidth;
    let hi = sorted[sorted.len() - 1] + 3.0 * bandwidth;
    let norm = 1.0 / (values.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    (0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let density: f64 = values
                .iter()
                .map(|v| (-0.5 * ((x - v) / bandwidth).powi(2)).exp())
                .sum();
            (x, density * norm)
        })
        .collect()
}
