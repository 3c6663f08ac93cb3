//! Error analysis for correlated Monte Carlo series: binning, jackknife,
//! integrated autocorrelation time, and replica merging.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("series too short: {got} < {need}")]
    TooShort { got: usize, need: usize },
    #[error("too few samples: {got} < {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("replica metadata mismatch: {0} vs {1}")]
    MetadataMismatch(String, String),
    #[error("empty stream")]
    EmptyStream,
}

/// A scalar measurement series with its current bin size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Series {
    pub values: Vec<f64>,
    pub bin_size: usize,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Self {
        Series {
            values,
            bin_size: 1,
        }
    }
}

/// Mean with an autocorrelation-aware error bar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    /// Integrated autocorrelation time; 0.5 for uncorrelated data.
    pub tau_int: f64,
    /// Effective number of independent samples, n / (2 tau_int).
    pub n_eff: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn stderr_of_mean(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

fn bin_means(xs: &[f64], size: usize) -> Vec<f64> {
    xs.chunks_exact(size).map(mean).collect()
}

/// Binning analysis: double the bin size until the error estimate plateaus
/// (<5% change) or fewer than 16 bins remain.
pub fn binned_error(series: &[f64]) -> Result<Estimate, StatsError> {
    let n = series.len();
    if n < 16 {
        return Err(StatsError::TooShort { got: n, need: 16 });
    }
    let m = mean(series);
    let naive = stderr_of_mean(series);
    if naive == 0.0 {
        return Ok(Estimate {
            mean: m,
            stderr: 0.0,
            tau_int: 0.5,
            n_eff: n as f64,
        });
    }
    let mut size = 1usize;
    let mut se = naive;
    loop {
        let next = size * 2;
        if n / next < 16 {
            break;
        }
        let se_next = stderr_of_mean(&bin_means(series, next));
        let rel = (se_next - se).abs() / se.max(f64::MIN_POSITIVE);
        size = next;
        let plateaued = rel < 0.05;
        se = se_next;
        if plateaued {
            break;
        }
    }
    let tau_int = ((se / naive).powi(2) / 2.0).max(0.5);
    Ok(Estimate {
        mean: m,
        stderr: se,
        tau_int,
        n_eff: (n as f64 / (2.0 * tau_int)).min(n as f64),
    })
}

/// Bin size selected by the plateau search of `binned_error`, capped so at
/// least 16 bins remain.
pub fn plateau_bin_size(series: &[f64]) -> Result<usize, StatsError> {
    let est = binned_error(series)?;
    let n = series.len();
    let mut size = 1usize;
    // recover the power-of-two size that realizes roughly 2*tau consecutive
    // samples per bin
    while size * 2 <= (2.0 * est.tau_int).ceil() as usize && n / (size * 2) >= 16 {
        size *= 2;
    }
    Ok(size)
}

/// Leave-one-bin-out jackknife of an arbitrary estimator over the series.
/// For the identity estimator this reproduces `binned_error` exactly.
pub fn jackknife<F>(series: &[f64], estimator: F) -> Result<Estimate, StatsError>
where
    F: Fn(&[f64]) -> f64,
{
    let underlying = binned_error(series)?;
    let size = plateau_bin_size(series)?;
    let nbins = series.len() / size;
    if nbins < 16 {
        return Err(StatsError::TooShort {
            got: nbins,
            need: 16,
        });
    }
    let used = &series[..nbins * size];
    let theta_full = estimator(used);
    let mut deleted = Vec::with_capacity(nbins);
    let mut scratch = Vec::with_capacity(used.len() - size);
    for b in 0..nbins {
        scratch.clear();
        scratch.extend_from_slice(&used[..b * size]);
        scratch.extend_from_slice(&used[(b + 1) * size..]);
        deleted.push(estimator(&scratch));
    }
    let theta_bar = mean(&deleted);
    let b = nbins as f64;
    let var = deleted
        .iter()
        .map(|d| (d - theta_bar).powi(2))
        .sum::<f64>()
        * (b - 1.0)
        / b;
    Ok(Estimate {
        mean: b * theta_full - (b - 1.0) * theta_bar,
        stderr: var.sqrt(),
        tau_int: underlying.tau_int,
        n_eff: underlying.n_eff,
    })
}

/// Jackknife of the ratio mean(numer)/mean(denom) over paired series.
pub fn jackknife_ratio(numer: &[f64], denom: &[f64]) -> Result<Estimate, StatsError> {
    assert_eq!(numer.len(), denom.len());
    let underlying = binned_error(numer)?;
    let size = plateau_bin_size(numer)?;
    let nbins = numer.len() / size;
    let num_bins = bin_means(&numer[..nbins * size], size);
    let den_bins = bin_means(&denom[..nbins * size], size);
    let sum_n: f64 = num_bins.iter().sum();
    let sum_d: f64 = den_bins.iter().sum();
    let theta_full = sum_n / sum_d;
    let b = nbins as f64;
    let deleted: Vec<f64> = (0..nbins)
        .map(|i| (sum_n - num_bins[i]) / (sum_d - den_bins[i]))
        .collect();
    let theta_bar = mean(&deleted);
    let var = deleted
        .iter()
        .map(|d| (d - theta_bar).powi(2))
        .sum::<f64>()
        * (b - 1.0)
        / b;
    Ok(Estimate {
        mean: b * theta_full - (b - 1.0) * theta_bar,
        stderr: var.sqrt(),
        tau_int: underlying.tau_int,
        n_eff: underlying.n_eff,
    })
}

/// Per-replica partial results: histogram counts keyed by an ordered label
/// plus named scalar estimates. Merging is associative and commutative on
/// counts; estimates combine weighted by effective sample size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplicaStats<K: Ord + Clone> {
    /// Fingerprint of model/lattice/run parameters; merges must agree.
    pub meta: String,
    pub counts: BTreeMap<K, u64>,
    pub total: u64,
    pub estimates: BTreeMap<String, Estimate>,
}

impl<K: Ord + Clone> ReplicaStats<K> {
    pub fn empty(meta: impl Into<String>) -> Self {
        ReplicaStats {
            meta: meta.into(),
            counts: BTreeMap::new(),
            total: 0,
            estimates: BTreeMap::new(),
        }
    }
}

pub fn merge_replicas<K: Ord + Clone>(
    parts: &[ReplicaStats<K>],
) -> Result<ReplicaStats<K>, StatsError> {
    let mut parts_iter = parts.iter();
    let first = parts_iter.next().ok_or(StatsError::EmptyStream)?;
    let mut merged = first.clone();
    for part in parts_iter {
        if part.meta != merged.meta {
            return Err(StatsError::MetadataMismatch(
                merged.meta.clone(),
                part.meta.clone(),
            ));
        }
        for (k, c) in &part.counts {
            *merged.counts.entry(k.clone()).or_insert(0) += c;
        }
        merged.total += part.total;
        for (name, est) in &part.estimates {
            match merged.estimates.get(name).copied() {
                None => {
                    merged.estimates.insert(name.clone(), *est);
                }
                Some(prev) => {
                    let w1 = prev.n_eff.max(0.0);
                    let w2 = est.n_eff.max(0.0);
                    let w = w1 + w2;
                    if w == 0.0 {
                        continue;
                    }
                    let mean = (w1 * prev.mean + w2 * est.mean) / w;
                    let var = (w1 * prev.stderr).powi(2) + (w2 * est.stderr).powi(2);
                    merged.estimates.insert(
                        name.clone(),
                        Estimate {
                            mean,
                            stderr: var.sqrt() / w,
                            tau_int: (w1 * prev.tau_int + w2 * est.tau_int) / w,
                            n_eff: w,
                        },
                    );
                }
            }
        }
    }
    Ok(merged)
}
