//! Reduction of cycle-count vectors to derived invariants (particle
//! fractions, average cycle length, long-cycle fraction) and accumulation of
//! the per-ground-state cycle-count distribution ("topological spectrum").

use crate::rational::Rational;
use crate::stats;
use crate::worldline::CycleVector;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("empty sample stream")]
    EmptyStream,
    #[error("cycle vector {0} does not describe {1} particles")]
    InvalidCycleVector(String, usize),
    #[error("stream mixes particle counts: {0} vs {1}")]
    MixedParticleCounts(usize, usize),
}

/// Per-length particle fractions of a cycle vector: component l of `p` is
/// n_l * l / N; `p_prime` drops the 1-beta component (l = 2..N).
#[derive(Clone, Debug, PartialEq)]
pub struct PFraction {
    pub n: usize,
    pub p: Vec<Rational>,
    pub p_prime: Vec<Rational>,
}

fn check(q: &CycleVector, n: usize) -> Result<(), TopologyError> {
    if q.n_particles() != n || q.0.len() != n {
        return Err(TopologyError::InvalidCycleVector(q.label(), n));
    }
    Ok(())
}

pub fn p_of(q: &CycleVector, n: usize) -> Result<PFraction, TopologyError> {
    check(q, n)?;
    let p: Vec<Rational> = q
        .0
        .iter()
        .enumerate()
        .map(|(i, &nl)| Rational::new(nl as i64 * (i + 1) as i64, n as i64))
        .collect();
    let p_prime = p[1..].to_vec();
    Ok(PFraction { n, p, p_prime })
}

/// Average permutation-cycle length over the particles in cycles longer than
/// 1 beta: dot product of p_prime with (2, 3, ..., N).
pub fn avg_cycle_length(q: &CycleVector, n: usize) -> Result<Rational, TopologyError> {
    check(q, n)?;
    let mut acc = Rational::ZERO;
    for (i, &nl) in q.0.iter().enumerate().skip(1) {
        let l = (i + 1) as i64;
        acc = acc + Rational::new(nl as i64 * l * l, n as i64);
    }
    Ok(acc)
}

/// Fraction of particles in cycles longer than 1 beta: 1 - n_1 / N.
pub fn f_pc(q: &CycleVector, n: usize) -> Result<Rational, TopologyError> {
    check(q, n)?;
    Ok(Rational::new(n as i64 - q.0[0] as i64, n as i64))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub q: CycleVector,
    pub avg_lambda: f64,
    pub prob: f64,
    pub err: f64,
    pub count: u64,
}

/// Empirical distribution over observed cycle vectors, sorted ascending by
/// average cycle length (ties broken lexicographically on the counts).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub n_particles: usize,
    pub total_samples: u64,
    /// Effective sample size used for the per-entry errors.
    pub n_eff: f64,
    pub entries: Vec<SpectrumEntry>,
}

/// Wilson-interval half width at one sigma; avoids zero-width bars for rare
/// entries.
fn wilson_halfwidth(p_hat: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let z = 1.0;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Mergeable histogram of cycle vectors; the commutative-monoid half of
/// spectrum accumulation.
pub type CycleHistogram = BTreeMap<CycleVector, u64>;

pub fn merge_histograms(into: &mut CycleHistogram, other: &CycleHistogram) {
    for (q, c) in other {
        *into.entry(q.clone()).or_insert(0) += c;
    }
}

/// Build a spectrum from merged counts and an externally supplied effective
/// sample size.
pub fn spectrum_from_counts(
    counts: &CycleHistogram,
    n_particles: usize,
    n_eff: f64,
) -> Result<Spectrum, TopologyError> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(TopologyError::EmptyStream);
    }
    let mut entries = Vec::with_capacity(counts.len());
    let mut keyed: Vec<(Rational, &CycleVector, u64)> = Vec::with_capacity(counts.len());
    for (q, &c) in counts {
        keyed.push((avg_cycle_length(q, n_particles)?, q, c));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    for (lambda, q, count) in keyed {
        let prob = count as f64 / total as f64;
        entries.push(SpectrumEntry {
            q: q.clone(),
            avg_lambda: lambda.to_f64(),
            prob,
            err: wilson_halfwidth(prob, n_eff),
            count,
        });
    }
    Ok(Spectrum {
        n_particles,
        total_samples: total,
        n_eff,
        entries,
    })
}

/// Accumulate a stream of cycle vectors into a spectrum. The effective
/// sample size comes from the binning analysis of the long-cycle fraction
/// series, used as a global correlation proxy for all entries.
pub fn accumulate(stream: &[CycleVector]) -> Result<Spectrum, TopologyError> {
    let first = stream.first().ok_or(TopologyError::EmptyStream)?;
    let n = first.n_particles();
    let mut counts: CycleHistogram = BTreeMap::new();
    let mut fpc_series = Vec::with_capacity(stream.len());
    for q in stream {
        if q.n_particles() != n {
            return Err(TopologyError::MixedParticleCounts(n, q.n_particles()));
        }
        fpc_series.push(f_pc(q, n)?.to_f64());
        *counts.entry(q.clone()).or_insert(0) += 1;
    }
    let n_eff = stats::binned_error(&fpc_series)
        .map(|e| e.n_eff)
        .unwrap_or(stream.len() as f64);
    spectrum_from_counts(&counts, n, n_eff)
}

impl Spectrum {
    /// The spectrum file body: one row per entry, most of the columns are
    /// plain shortest-round-trip floats so reruns are byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,avg_lambda,prob,err,count\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.q.label(),
                e.avg_lambda,
                e.prob,
                e.err,
                e.count
            ));
        }
        out
    }

    pub fn to_json(&self, metadata: serde_json::Value) -> String {
        let doc = serde_json::json!({
            "metadata": metadata,
            "n_particles": self.n_particles,
            "total_samples": self.total_samples,
            "n_eff": self.n_eff,
            "entries": self.entries,
        });
        serde_json::to_string_pretty(&doc).expect("spectrum serializes")
    }

    /// Entries with probability above `threshold`, most probable structure
    /// of each row spelled out as per-length particle percentages.
    pub fn report(&self, threshold: f64) -> String {
        let mut out = String::from("q,p_percent,avg_lambda,prob,err,count\n");
        for e in &self.entries {
            if e.prob <= threshold {
                continue;
            }
            let pf = p_of(&e.q, self.n_particles).expect("entries are consistent");
            let pcts: Vec<String> = pf
                .p
                .iter()
                .enumerate()
                .filter(|(_, r)| !r.is_zero())
                .map(|(i, r)| format!("{}b:{:.1}%", i + 1, 100.0 * r.to_f64()))
                .collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.q.label(),
                pcts.join(" "),
                e.avg_lambda,
                e.prob,
                e.err,
                e.count
            ));
        }
        out
    }

    pub fn most_probable(&self) -> Option<&SpectrumEntry> {
        self.entries.iter().max_by(|a, b| {
            a.prob
                .partial_cmp(&b.prob)
                .unwrap()
                .then_with(|| b.q.cmp(&a.q))
        })
    }

    /// Entries above threshold containing any cycle of length >= min_len.
    pub fn long_cycle_entries(&self, min_len: usize, threshold: f64) -> Vec<&SpectrumEntry> {
        self.entries
            .iter()
            .filter(|e| e.prob > threshold && e.q.longest_cycle() >= min_len)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(counts: &[u32]) -> CycleVector {
        CycleVector(counts.to_vec())
    }

    #[test]
    fn p_of_examples() {
        let pf = p_of(&q(&[1, 1, 0]), 3).unwrap();
        assert_eq!(pf.p, vec![
            Rational::new(1, 3),
            Rational::new(2, 3),
            Rational::ZERO
        ]);
        assert_eq!(pf.p_prime, vec![Rational::new(2, 3), Rational::ZERO]);

        let pf = p_of(&q(&[4, 0, 0, 0]), 4).unwrap();
        assert_eq!(pf.p[0], Rational::ONE);
        assert!(pf.p[1..].iter().all(|r| r.is_zero()));

        let pf = p_of(&q(&[0, 0, 1]), 3).unwrap();
        assert_eq!(pf.p_prime, vec![Rational::ZERO, Rational::ONE]);

        // sum of p is exactly one
        let total = pf.p.iter().fold(Rational::ZERO, |a, &b| a + b);
        assert_eq!(total, Rational::ONE);

        assert!(p_of(&q(&[1, 0, 1]), 3).is_err());
    }

    #[test]
    fn avg_cycle_length_examples() {
        assert_eq!(
            avg_cycle_length(&q(&[0, 0, 1]), 3).unwrap(),
            Rational::from_int(3)
        );
        assert_eq!(
            avg_cycle_length(&q(&[1, 1, 0]), 3).unwrap(),
            Rational::new(4, 3)
        );
        assert_eq!(
            avg_cycle_length(&q(&[5, 0, 0, 0, 0]), 5).unwrap(),
            Rational::ZERO
        );
    }

    #[test]
    fn f_pc_examples() {
        assert_eq!(f_pc(&q(&[3, 0, 0]), 3).unwrap(), Rational::ZERO);
        assert_eq!(f_pc(&q(&[1, 1, 0]), 3).unwrap(), Rational::new(2, 3));
        assert_eq!(f_pc(&q(&[0, 0, 1]), 3).unwrap(), Rational::ONE);
    }

    #[test]
    fn accumulate_counts() {
        let qa = q(&[1, 1, 0]);
        let qb = q(&[0, 0, 1]);
        let stream = vec![qa.clone(), qa.clone(), qb.clone()];
        let spec = accumulate(&stream).unwrap();
        assert_eq!(spec.total_samples, 3);
        let probs: BTreeMap<_, _> = spec
            .entries
            .iter()
            .map(|e| (e.q.clone(), e.prob))
            .collect();
        assert!((probs[&qa] - 2.0 / 3.0).abs() < 1e-15);
        assert!((probs[&qb] - 1.0 / 3.0).abs() < 1e-15);
        // sorted ascending by average cycle length: qa (4/3) before qb (3)
        assert_eq!(spec.entries[0].q, qa);
        let sum: f64 = spec.entries.iter().map(|e| e.prob).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(accumulate(&[]).is_err());
    }

    #[test]
    fn report_threshold_behaviour() {
        let stream: Vec<CycleVector> = std::iter::repeat_n(q(&[2, 0]), 99)
            .chain(std::iter::repeat_n(q(&[0, 1]), 1))
            .collect();
        let spec = accumulate(&stream).unwrap();
        let full = spec.report(0.0);
        assert_eq!(full.lines().count(), 3); // header + 2 entries
        let trimmed = spec.report(0.05);
        assert_eq!(trimmed.lines().count(), 2);
        let none = spec.report(1.0);
        assert_eq!(none.lines().count(), 1); // header only
    }

    #[test]
    fn mean_fpc_equals_spectrum_weighted_fpc_exactly() {
        let stream = vec![
            q(&[1, 1, 0]),
            q(&[3, 0, 0]),
            q(&[1, 1, 0]),
            q(&[0, 0, 1]),
            q(&[3, 0, 0]),
        ];
        let n = 3i128;
        // stream mean of (N - n1) over N, as an exact integer sum
        let lhs: i128 = stream.iter().map(|qq| n - qq.0[0] as i128).sum();
        let spec = accumulate(&stream).unwrap();
        let rhs: i128 = spec
            .entries
            .iter()
            .map(|e| e.count as i128 * (n - e.q.0[0] as i128))
            .sum();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn long_cycle_queries() {
        let stream: Vec<CycleVector> = std::iter::repeat_n(q(&[4, 0, 0, 0]), 90)
            .chain(std::iter::repeat_n(q(&[0, 0, 0, 1]), 10))
            .collect();
        let spec = accumulate(&stream).unwrap();
        assert_eq!(spec.most_probable().unwrap().q, q(&[4, 0, 0, 0]));
        assert_eq!(spec.long_cycle_entries(4, 0.01).len(), 1);
        assert!(spec.long_cycle_entries(4, 0.5).is_empty());
    }

    proptest! {
        #[test]
        fn accumulate_is_permutation_invariant(seed in 0u64..1000) {
            use rand::prelude::*;
            use rand::seq::SliceRandom;
            let stream = vec![
                q(&[1, 1, 0]), q(&[3, 0, 0]), q(&[0, 0, 1]),
                q(&[1, 1, 0]), q(&[3, 0, 0]), q(&[3, 0, 0]),
            ];
            let mut shuffled = stream.clone();
            let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
            shuffled.shuffle(&mut rng);
            let a = accumulate(&stream).unwrap();
            let b = accumulate(&shuffled).unwrap();
            let counts_a: Vec<_> = a.entries.iter().map(|e| (e.q.clone(), e.count)).collect();
            let counts_b: Vec<_> = b.entries.iter().map(|e| (e.q.clone(), e.count)).collect();
            prop_assert_eq!(counts_a, counts_b);
        }
    }

    #[test]
    fn csv_shape() {
        let spec = accumulate(&[q(&[2, 0]), q(&[0, 1])]).unwrap();
        let csv = spec.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "q,avg_lambda,prob,err,count");
        assert!(lines.next().unwrap().starts_with("2-0,0,0.5,"));
        assert!(lines.next().unwrap().starts_with("0-1,2,0.5,"));
    }
}
