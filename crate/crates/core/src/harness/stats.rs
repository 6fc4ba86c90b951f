//! Batch statistics of peak `μ`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::episode::EpisodeResult;
use crate::error::{Error, Result};

pub const HISTOGRAM_BINS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mean: f64,
    pub std: f64,
    /// Zero spread; the density is a point mass.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub n: usize,
    pub mean_mu: f64,
    /// Sample standard deviation.
    pub std_mu: f64,
    /// Standard error of the mean, `σ(μ̄)`.
    pub sigma_mu: f64,
    pub two_sigma_halfwidth: f64,
    pub histogram: Histogram,
    /// Cumulative fraction at each bin's upper edge.
    pub cdf: Vec<f64>,
    pub gaussian_fit: GaussianFit,
}

/// Summary over `samples` with a fixed-width histogram on `[0, hist_max]`;
/// values past the range fall in the last bin.
pub fn summarize(samples: &[f64], hist_max: f64) -> Result<StatsSummary> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Stats(format!("need at least 2 samples, got {n}")));
    }
    if !(hist_max > 0.0) {
        return Err(Error::Stats(format!("histogram range must be positive, got {hist_max}")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    let se = std / (n as f64).sqrt();
    let width = hist_max / HISTOGRAM_BINS as f64;
    let edges: Vec<f64> = (0..=HISTOGRAM_BINS).map(|k| k as f64 * width).collect();
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &x in samples {
        let b = ((x / width).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }
    let mut run = 0usize;
    let cdf = counts
        .iter()
        .map(|c| {
            run += c;
            run as f64 / n as f64
        })
        .collect();
    Ok(StatsSummary {
        n,
        mean_mu: mean,
        std_mu: std,
        sigma_mu: se,
        two_sigma_halfwidth: 2.0 * se,
        histogram: Histogram { edges, counts },
        cdf,
        gaussian_fit: GaussianFit { mean, std, degenerate: std == 0.0 },
    })
}

/// Summary of `mu_peak` with the histogram spanning `[0, N_q·stop_fraction]`.
pub fn summarize_results(results: &[EpisodeResult], stop_fraction: f64) -> Result<StatsSummary> {
    let n_q = results.first().map(|r| r.n_qubits).unwrap_or(0);
    let mus: Vec<f64> = results.iter().map(|r| r.mu_peak).collect();
    summarize(&mus, n_q as f64 * stop_fraction)
}

/// `(Δμ̄, 2^Δμ̄)` with `Δμ̄ = μ̄_b − μ̄_a`.
pub fn compare_strategies(a: &StatsSummary, b: &StatsSummary) -> (f64, f64) {
    let d = b.mean_mu - a.mean_mu;
    (d, d.exp2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub n: usize,
    pub mean_diff: f64,
    pub std_err: f64,
    pub t: f64,
    /// One-sided p-value for `mean(b − a) > 0`.
    pub p_value: f64,
}

/// Paired one-sided t-test of `b` exceeding `a`.
pub fn paired_test(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Stats(format!("paired test needs equal lengths ≥ 2, got {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let (t, p) = if se == 0.0 {
        let p = if mean > 0.0 { 0.0 } else { 1.0 };
        (f64::INFINITY.copysign(mean), p)
    } else {
        let t = mean / se;
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::Stats(e.to_string()))?;
        (t, 1.0 - dist.cdf(t))
    };
    Ok(PairedTest { n, mean_diff: mean, std_err: se, t, p_value: p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_samples() {
        let s = summarize(&[3.0, 5.0], 30.0).unwrap();
        assert_eq!(s.mean_mu, 4.0);
        assert!((s.std_mu - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.gaussian_fit.mean, s.mean_mu);
        assert_eq!(*s.cdf.last().unwrap(), 1.0);
        assert!(summarize(&[1.0], 30.0).is_err());
    }

    #[test]
    fn constant_is_degenerate() {
        let s = summarize(&[4.0; 10], 30.0).unwrap();
        assert_eq!(s.std_mu, 0.0);
        assert!(s.gaussian_fit.degenerate);
    }

    #[test]
    fn comparison() {
        let a = summarize(&[13.0, 14.8], 30.0).unwrap();
        let b = summarize(&[14.68, 16.48], 30.0).unwrap();
        let (d, r) = compare_strategies(&a, &b);
        assert!((d - 1.68).abs() < 1e-12);
        assert!((r - 3.2043).abs() < 1e-4);
        assert_eq!(compare_strategies(&b, &a).0, -d);
    }
}
