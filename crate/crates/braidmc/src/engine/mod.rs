//! Worm-algorithm sampling engine: thermalization, measurement cadence,
//! fixed-N filtering, and the standard energy estimator.

pub mod updates;

mod tune;

pub use tune::{tune_mu, MuObservation, MuTuneOutcome};
pub use updates::{Choice, Evaluated, MoveKind, SamplerContext, UpdateStats, KIND_NAMES};

use crate::lattice::{
    build_interactions, build_lattice, diagonal_energy, energy_delta_hop, FockState,
    InteractionKind, InteractionTable, Lattice, LatticeError, LatticeKind, LatticeSpec, ModelSpec,
};
use crate::stats::{self, Estimate, StatsError};
use crate::worldline::{log_weight, Configuration, CycleVector, WorldlineError};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("sampler stalled: no valid snapshot within {0} sweeps (bad mu or frozen dynamics)")]
    StalledSampler(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Worldline(#[from] WorldlineError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("invalid run configuration: {0}")]
    BadConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Fill sites one at a time, minimizing the incremental diagonal energy
    /// (lowest site index on ties). Lands on a classical ground-state
    /// pattern in the deep insulators.
    Greedy,
    /// Particles evenly spaced by site index.
    Spaced,
    /// Checkerboard pattern; square lattices at half filling.
    Checkerboard,
}

/// Everything one replica needs to run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunParams {
    pub model: ModelSpec,
    pub lattice: LatticeSpec,
    pub interaction: InteractionKind,
    pub dipolar_cutoff: f64,
    pub thermalization_sweeps: usize,
    pub target_samples: usize,
    /// Sweeps between measurement attempts.
    pub measure_interval: usize,
    pub seed: u64,
    /// Relative weight of the worm sector; cancels in all closed-sector
    /// observables.
    pub worm_fugacity: f64,
    pub initial: InitialState,
    /// Abort when this many sweeps pass without a valid snapshot.
    pub stall_limit_sweeps: usize,
    /// Run the full structural validation after every accepted update
    /// (slow; meant for small test systems).
    pub validate_every_update: bool,
}

impl RunParams {
    pub fn new(model: ModelSpec, lattice: LatticeSpec, interaction: InteractionKind) -> Self {
        RunParams {
            model,
            lattice,
            interaction,
            dipolar_cutoff: 4.0,
            thermalization_sweeps: 2_000,
            target_samples: 10_000,
            measure_interval: 2,
            seed: 1,
            worm_fugacity: 1.0,
            initial: InitialState::Greedy,
            stall_limit_sweeps: 10_000,
            validate_every_update: false,
        }
    }
}

/// Immutable per-measurement record emitted by `run`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub cycles: CycleVector,
    pub fock0: FockState,
    /// Interaction energy of the tau = 0 Fock state (V part, mu excluded).
    pub diag_energy: f64,
    /// Time-averaged interaction energy over the configuration.
    pub avg_diag_energy: f64,
    pub kinks: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProgressBlock {
    pub samples: usize,
    pub sweeps: u64,
    pub kinks: usize,
    pub acceptance: Vec<(String, f64)>,
}

/// Output of one replica: snapshots plus bookkeeping for the invariant and
/// drift checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleStream {
    pub n_particles: usize,
    pub snapshots: Vec<Snapshot>,
    pub stats: UpdateStats,
    pub sweeps_run: u64,
    pub max_weight_drift: f64,
    pub invariant_violations: u64,
}

impl SampleStream {
    pub fn cycle_vectors(&self) -> Vec<CycleVector> {
        self.snapshots.iter().map(|s| s.cycles.clone()).collect()
    }

    pub fn fpc_series(&self) -> Vec<f64> {
        let n = self.n_particles as f64;
        self.snapshots
            .iter()
            .map(|s| 1.0 - s.cycles.0[0] as f64 / n)
            .collect()
    }
}

/// Deterministic initial Fock state.
pub fn initial_fock(
    lattice: &Lattice,
    table: &InteractionTable,
    v: f64,
    n_particles: usize,
    kind: InitialState,
) -> Result<FockState, EngineError> {
    let m = lattice.n_sites;
    match kind {
        InitialState::Greedy => {
            let mut fock = vec![0u8; m];
            for _ in 0..n_particles {
                let mut best: Option<(f64, usize)> = None;
                for s in 0..m {
                    if fock[s] == 1 {
                        continue;
                    }
                    let cost: f64 = table.per_site[s]
                        .iter()
                        .filter(|&&(k, _)| fock[k] == 1)
                        .map(|&(_, c)| v * c)
                        .sum();
                    if best.map(|(b, _)| cost < b).unwrap_or(true) {
                        best = Some((cost, s));
                    }
                }
                let (_, s) = best.expect("n_particles <= n_sites");
                fock[s] = 1;
            }
            Ok(fock)
        }
        InitialState::Spaced => {
            let mut fock = vec![0u8; m];
            for i in 0..n_particles {
                fock[i * m / n_particles] = 1;
            }
            Ok(fock)
        }
        InitialState::Checkerboard => {
            if lattice.spec.kind != LatticeKind::Square {
                return Err(EngineError::BadConfig(
                    "checkerboard start needs a square lattice".into(),
                ));
            }
            let lx = lattice.spec.l;
            let fock: FockState = (0..m)
                .map(|s| (((s % lx) + (s / lx)) % 2 == 0) as u8)
                .collect();
            let count = fock.iter().map(|&n| n as usize).sum::<usize>();
            if count != n_particles {
                return Err(EngineError::BadConfig(format!(
                    "checkerboard start fills {count} sites, target is {n_particles}"
                )));
            }
            Ok(fock)
        }
    }
}

/// One replica's sampler: context, configuration, RNG, and counters.
pub struct WormSampler<'a> {
    pub ctx: SamplerContext<'a>,
    pub config: Configuration,
    pub rng: Pcg64,
    pub stats: UpdateStats,
    /// Global lattice-symmetry relabelings, applied once per sweep; they
    /// preserve the weight exactly and mix degenerate ordered sectors.
    translations: Vec<Vec<usize>>,
    pub translate_moves: u64,
    validate_every_update: bool,
}

impl<'a> WormSampler<'a> {
    pub fn new(
        lattice: &'a Lattice,
        table: &'a InteractionTable,
        model: &'a ModelSpec,
        fock0: &[u8],
        seed: u64,
        worm_fugacity: f64,
    ) -> Self {
        let ctx = SamplerContext::new(lattice, table, model, worm_fugacity);
        let mut config = Configuration::new(lattice.n_sites, model.beta, fock0);
        config
            .tracked_log_weight
            .add(-model.beta * diagonal_energy(fock0, table, model.v, model.mu));
        WormSampler {
            ctx,
            config,
            rng: Pcg64::seed_from_u64(seed),
            stats: UpdateStats::default(),
            translations: lattice.translation_maps(),
            translate_moves: 0,
            validate_every_update: false,
        }
    }

    pub fn set_validate_every_update(&mut self, on: bool) {
        self.validate_every_update = on;
    }

    /// One lazy global translation: with one extra slot for the identity,
    /// pick a symmetry map uniformly and apply it. Always accepted (the
    /// weight is invariant under lattice symmetries). The identity slot
    /// keeps sublattice parity from evolving deterministically with the
    /// step count.
    pub fn translate_step(&mut self) {
        if self.translations.is_empty() {
            return;
        }
        let idx = self.rng.random_range(0..=self.translations.len());
        if idx == self.translations.len() {
            return;
        }
        self.config.relabel_sites(&self.translations[idx]);
        self.translate_moves += 1;
        if self.validate_every_update {
            self.config
                .validate()
                .expect("configuration invariant violated after translation");
        }
    }

    /// One adaptive sweep: a batch of elementary updates sized to the
    /// current configuration (site count plus kink count), followed by one
    /// global translation. Used during thermalization; between measurements
    /// the batch size must be frozen (see `updates`), otherwise the
    /// state-dependent cadence reweights snapshots by one over the sweep
    /// length.
    pub fn sweep(&mut self) -> usize {
        let n_updates = self.config.n_sites() + self.config.n_kinks();
        self.updates(n_updates);
        self.translate_step();
        n_updates
    }

    /// A fixed-count batch of elementary updates.
    pub fn updates(&mut self, n: usize) {
        for _ in 0..n {
            let (_, accepted) = self
                .ctx
                .update(&mut self.config, &mut self.rng, &mut self.stats);
            if accepted && self.validate_every_update {
                self.config
                    .validate()
                    .expect("configuration invariant violated after accepted update");
            }
        }
    }

    /// Tracked-vs-recomputed log-weight discrepancy; closed sector only.
    pub fn log_weight_drift(&self) -> Result<f64, WorldlineError> {
        let lw = log_weight(&self.config, self.ctx.lattice, self.ctx.model, self.ctx.table)?;
        let full = lw + self.config.n_kinks() as f64 * self.ctx.model.beta.ln();
        Ok((full - self.config.tracked_log_weight.value()).abs())
    }
}

/// Time-averaged interaction energy (V part) of a closed configuration.
pub fn time_averaged_diag(
    config: &Configuration,
    table: &InteractionTable,
    v: f64,
) -> Result<f64, WorldlineError> {
    let mut fock = config.fock_state(0.0)?;
    let mut energy = diagonal_energy(&fock, table, v, 0.0);
    let mut acc = 0.0;
    let mut u_prev = 0.0;
    for k in config.kinks() {
        let u = k.time / config.beta();
        acc += energy * (u - u_prev);
        u_prev = u;
        energy += energy_delta_hop(&fock, k.from, k.to, table, v)
            .map_err(|e| WorldlineError::Inconsistent(e.to_string()))?;
        fock[k.from] = 0;
        fock[k.to] = 1;
    }
    acc += energy * (1.0 - u_prev);
    Ok(acc)
}

/// A finished replica: the sample stream plus the resumable final state.
pub struct RunOutput {
    pub stream: SampleStream,
    pub config: Configuration,
    pub rng: Pcg64,
    pub lattice_fingerprint: u64,
}

pub fn run(params: &RunParams) -> Result<SampleStream, EngineError> {
    run_with(params, &mut |_| {})
}

/// Run one replica, invoking `on_block` once per measurement block.
pub fn run_with(
    params: &RunParams,
    on_block: &mut dyn FnMut(ProgressBlock),
) -> Result<SampleStream, EngineError> {
    run_full(params, on_block).map(|out| out.stream)
}

/// Like `run_with`, also handing back the final configuration and RNG for
/// checkpointing.
pub fn run_full(
    params: &RunParams,
    on_block: &mut dyn FnMut(ProgressBlock),
) -> Result<RunOutput, EngineError> {
    let lattice = build_lattice(params.lattice)?;
    let table = build_interactions(&lattice, params.interaction, params.dipolar_cutoff)?;
    let n_target = params.model.target_particles(lattice.n_sites)?;
    let fock0 = initial_fock(&lattice, &table, params.model.v, n_target, params.initial)?;
    let mut sampler = WormSampler::new(
        &lattice,
        &table,
        &params.model,
        &fock0,
        params.seed,
        params.worm_fugacity,
    );
    sampler.set_validate_every_update(params.validate_every_update);

    // thermalize with adaptive sweeps, tracking the late-stage kink count
    let mut kink_avg = 0.0f64;
    let mut kink_avg_n = 0u64;
    let tail_start = params.thermalization_sweeps / 2;
    for s in 0..params.thermalization_sweeps {
        sampler.sweep();
        if s >= tail_start {
            kink_avg += sampler.config.n_kinks() as f64;
            kink_avg_n += 1;
        }
    }
    // freeze the sweep size so the measurement cadence is independent of
    // the instantaneous state; a cadence tied to the current kink count
    // would underweight large configurations
    let frozen_sweep = if kink_avg_n > 0 {
        lattice.n_sites + (kink_avg / kink_avg_n as f64).ceil() as usize
    } else {
        lattice.n_sites + sampler.config.n_kinks()
    };

    let mut snapshots: Vec<Snapshot> = Vec::with_capacity(params.target_samples);
    let mut sweeps: u64 = params.thermalization_sweeps as u64;
    let mut sweeps_since_snapshot: usize = 0;
    let mut max_drift = 0.0f64;
    let mut violations: u64 = 0;
    let block_size = (params.target_samples / 20).clamp(1, 5_000);

    while snapshots.len() < params.target_samples {
        for _ in 0..params.measure_interval.max(1) {
            sampler.updates(frozen_sweep);
            sampler.translate_step();
        }
        sweeps += params.measure_interval.max(1) as u64;
        sweeps_since_snapshot += params.measure_interval.max(1);

        let config = &sampler.config;
        if config.worm().is_none() && config.particle_count() == n_target {
            if config.validate().is_err() {
                violations += 1;
            }
            let cycles = config.permutation_cycles()?;
            if cycles.n_particles() != n_target {
                violations += 1;
            }
            if params.model.t > 0.0 {
                let drift = sampler.log_weight_drift()?;
                max_drift = max_drift.max(drift);
            }
            let fock = config.fock_state(0.0)?;
            let diag = diagonal_energy(&fock, &table, params.model.v, 0.0);
            let avg_diag = time_averaged_diag(config, &table, params.model.v)?;
            snapshots.push(Snapshot {
                cycles,
                fock0: fock,
                diag_energy: diag,
                avg_diag_energy: avg_diag,
                kinks: config.n_kinks() as u32,
            });
            sweeps_since_snapshot = 0;
            if snapshots.len() % block_size == 0 {
                on_block(ProgressBlock {
                    samples: snapshots.len(),
                    sweeps,
                    kinks: config.n_kinks(),
                    acceptance: KIND_NAMES
                        .iter()
                        .enumerate()
                        .map(|(k, name)| (name.to_string(), sampler.stats.acceptance(k)))
                        .collect(),
                });
            }
        } else if sweeps_since_snapshot > params.stall_limit_sweeps {
            return Err(EngineError::StalledSampler(params.stall_limit_sweeps));
        }
    }

    let WormSampler {
        config, rng, stats, ..
    } = sampler;
    Ok(RunOutput {
        stream: SampleStream {
            n_particles: n_target,
            snapshots,
            stats,
            sweeps_run: sweeps,
            max_weight_drift: max_drift,
            invariant_violations: violations,
        },
        config,
        rng,
        lattice_fingerprint: lattice.fingerprint(),
    })
}

/// Standard worldline energy estimator: time-averaged diagonal energy minus
/// kink count over beta, jackknifed over binned snapshots.
pub fn estimate_energy(stream: &SampleStream, beta: f64) -> Result<Estimate, EngineError> {
    if stream.snapshots.len() < 100 {
        return Err(EngineError::Stats(StatsError::TooFewSamples {
            got: stream.snapshots.len(),
            need: 100,
        }));
    }
    let series: Vec<f64> = stream
        .snapshots
        .iter()
        .map(|s| s.avg_diag_energy - s.kinks as f64 / beta)
        .collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(stats::jackknife(&series, mean)?)
}
