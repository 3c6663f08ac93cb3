//! Chemical-potential tuning: bisection on the grand-canonical mean particle
//! number measured in short pilot runs.

use super::{initial_fock, EngineError, RunParams, WormSampler};
use crate::lattice::{build_interactions, build_lattice};
use crate::stats;
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MuObservation {
    pub mu: f64,
    pub n_mean: f64,
    pub n_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MuTuneOutcome {
    pub mu: f64,
    pub observations: Vec<MuObservation>,
    /// Set when the pilot means violate monotonicity in mu beyond noise.
    pub non_monotone: bool,
}

fn pilot_mean_n(
    params: &RunParams,
    mu: f64,
    pilot_sweeps: usize,
    seed_salt: u64,
) -> Result<MuObservation, EngineError> {
    let mut model = params.model;
    model.mu = mu;
    let lattice = build_lattice(params.lattice)?;
    let table = build_interactions(&lattice, params.interaction, params.dipolar_cutoff)?;
    let n_target = params.model.target_particles(lattice.n_sites)?;
    let fock0 = initial_fock(&lattice, &table, model.v, n_target, params.initial)?;
    let mut sampler = WormSampler::new(
        &lattice,
        &table,
        &model,
        &fock0,
        params.seed ^ seed_salt,
        params.worm_fugacity,
    );
    for _ in 0..pilot_sweeps / 4 {
        sampler.sweep();
    }
    // fixed batch size keeps the pilot cadence state-independent
    let frozen_sweep = lattice.n_sites + sampler.config.n_kinks();
    let mut series = Vec::with_capacity(pilot_sweeps);
    for _ in 0..pilot_sweeps {
        sampler.updates(frozen_sweep);
        if sampler.config.worm().is_none() {
            series.push(sampler.config.particle_count() as f64);
        }
    }
    if series.len() < 16 {
        return Err(EngineError::BadConfig(format!(
            "pilot at mu={mu} visited the closed sector only {} times",
            series.len()
        )));
    }
    let est = stats::binned_error(&series)?;
    Ok(MuObservation {
        mu,
        n_mean: est.mean,
        n_err: est.stderr,
    })
}

/// Bisection on <N>(mu) towards `target_n`. Returns the tuned mu together
/// with the pilot observations; flags non-monotone pilot data instead of
/// failing on it.
pub fn tune_mu(
    params: &RunParams,
    target_n: usize,
    pilot_sweeps: usize,
) -> Result<MuTuneOutcome, EngineError> {
    let target = target_n as f64;
    let span = (params.model.v.abs() + 4.0 * params.model.t + 1.0).max(1.0);
    let mut observations = Vec::new();
    let mut lo = params.model.mu - span;
    let mut hi = params.model.mu + span;
    let mut salt = 0x5eed;

    let mut measure = |mu: f64, observations: &mut Vec<MuObservation>| {
        salt += 1;
        let obs = pilot_mean_n(params, mu, pilot_sweeps, salt)?;
        observations.push(obs);
        Ok::<MuObservation, EngineError>(obs)
    };

    let mut n_lo = measure(lo, &mut observations)?;
    let mut n_hi = measure(hi, &mut observations)?;
    for _ in 0..8 {
        if n_lo.n_mean <= target {
            break;
        }
        lo -= span;
        n_lo = measure(lo, &mut observations)?;
    }
    for _ in 0..8 {
        if n_hi.n_mean >= target {
            break;
        }
        hi += span;
        n_hi = measure(hi, &mut observations)?;
    }
    if n_lo.n_mean > target || n_hi.n_mean < target {
        return Err(EngineError::BadConfig(format!(
            "could not bracket <N> = {target} within mu in [{lo}, {hi}]"
        )));
    }

    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        let obs = measure(mid, &mut observations)?;
        if (obs.n_mean - target).abs() <= obs.n_err.max(0.02) {
            lo = mid;
            hi = mid;
            break;
        }
        if obs.n_mean < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);

    // monotonicity audit over the pilot set
    let mut sorted = observations.clone();
    sorted.sort_by(|a, b| a.mu.partial_cmp(&b.mu).unwrap());
    let non_monotone = sorted.windows(2).any(|w| {
        let noise = 3.0 * (w[0].n_err.powi(2) + w[1].n_err.powi(2)).sqrt().max(0.05);
        w[1].n_mean + noise < w[0].n_mean
    });

    Ok(MuTuneOutcome {
        mu,
        observations,
        non_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{InteractionKind, LatticeSpec, ModelSpec};
    use crate::engine::RunParams;

    #[test]
    fn tunes_dimer_to_half_filling() {
        let model = ModelSpec::new(1.0, 0.0, 0.2, (1, 2), 2.0).unwrap();
        let mut p = RunParams::new(model, LatticeSpec::chain(2), InteractionKind::NearestNeighbor);
        p.seed = 5;
        let outcome = tune_mu(&p, 1, 3_000).unwrap();
        // particle-hole symmetric point of the free dimer is mu = 0
        assert!(
            outcome.mu.abs() < 0.5,
            "tuned mu {} observations {:?}",
            outcome.mu,
            outcome.observations
        );
        assert!(!outcome.non_monotone);
    }

    #[test]
    fn large_negative_mu_empties_the_lattice() {
        let model = ModelSpec::new(1.0, 0.0, -30.0, (1, 2), 2.0).unwrap();
        let mut p = RunParams::new(model, LatticeSpec::chain(4), InteractionKind::NearestNeighbor);
        p.seed = 9;
        let obs = pilot_mean_n(&p, -30.0, 2_000, 1).unwrap();
        assert!(obs.n_mean < 0.05, "<N> = {}", obs.n_mean);
    }
}
