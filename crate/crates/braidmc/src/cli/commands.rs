//! Command implementations behind the thin binary.

use super::artifacts::{
    self, manifest_json, read_samples, stream_from_snapshots, SamplesHeader,
};
use super::config::{ConfigError, RunConfig};
use crate::checkpoint::Checkpoint;
use crate::engine::{
    self, estimate_energy, run_full, EngineError, ProgressBlock, SampleStream,
};
use crate::lattice::{build_interactions, build_lattice};
use crate::measurement::{build_cb_states, build_str_states, info_content, optimal_tree};
use crate::oracle::{ed_solve, thermal_diag, thermal_energy, trotter_cycles, EdMode, OracleError};
use crate::rational::replica_seed;
use crate::stats::{self, Estimate, ReplicaStats};
use crate::topology::{self, CycleHistogram, Spectrum};
use crate::worldline::CycleVector;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sampler stalled; tune mu or the worm fugacity")]
    Stalled,
    #[error("oracle basis too large: {0}")]
    BasisTooLarge(String),
    #[error("oracle comparison failed: {0}")]
    ComparisonFailed(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Stalled => 3,
            CliError::BasisTooLarge(_) => 4,
            CliError::ComparisonFailed(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::StalledSampler(_) => CliError::Stalled,
            other => CliError::Other(other.to_string()),
        }
    }
}

fn worker_count(replicas: u32) -> usize {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("BRAIDMC_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(available);
    cap.min(replicas as usize).max(1)
}

/// Run all replicas, distributing indices over a bounded worker pool;
/// results come back ordered by replica index.
fn run_replicas(
    cfg: &RunConfig,
    log: Option<&Mutex<std::io::BufWriter<std::fs::File>>>,
) -> Result<Vec<engine::RunOutput>, CliError> {
    let replicas = cfg.replicas;
    let threads = worker_count(replicas);
    let next = std::sync::atomic::AtomicU32::new(0);
    let mut slots: Vec<Option<Result<engine::RunOutput, EngineError>>> =
        (0..replicas).map(|_| None).collect();
    let slot_refs = Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let r = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if r >= replicas {
                    break;
                }
                let mut params = cfg.params.clone();
                params.seed = replica_seed(cfg.params.seed, r);
                let mut sink = |block: ProgressBlock| {
                    if let Some(log) = log {
                        let mut doc = serde_json::to_value(&block).expect("block serializes");
                        doc["replica"] = serde_json::json!(r);
                        let mut w = log.lock().expect("log lock");
                        let _ = writeln!(w, "{doc}");
                    }
                };
                let out = run_full(&params, &mut sink);
                slot_refs.lock().expect("slot lock")[r as usize] = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every replica ran").map_err(CliError::from))
        .collect()
}

#[derive(Debug)]
pub struct MergedRun {
    pub spectrum: Spectrum,
    pub energy: Option<Estimate>,
    pub fpc: Option<Estimate>,
    pub total_samples: u64,
    pub n_particles: usize,
    pub invariant_violations: u64,
    pub max_weight_drift: f64,
}

/// Merge replica streams: histogram counts add; effective sample sizes add;
/// scalar estimates combine weighted by effective sample size.
pub fn merge_streams(streams: &[SampleStream], meta: &str) -> Result<MergedRun, CliError> {
    let n_particles = streams
        .iter()
        .find(|s| !s.snapshots.is_empty())
        .map(|s| s.n_particles)
        .ok_or_else(|| CliError::Other("no snapshots collected".into()))?;
    let mut counts: CycleHistogram = BTreeMap::new();
    let mut n_eff_total = 0.0;
    let mut replica_stats: Vec<ReplicaStats<CycleVector>> = Vec::new();
    let mut violations = 0;
    let mut drift = 0.0f64;
    for stream in streams {
        violations += stream.invariant_violations;
        drift = drift.max(stream.max_weight_drift);
        let mut part = ReplicaStats::empty(meta);
        for snap in &stream.snapshots {
            *part.counts.entry(snap.cycles.clone()).or_insert(0) += 1;
            *counts.entry(snap.cycles.clone()).or_insert(0) += 1;
        }
        part.total = stream.snapshots.len() as u64;
        let fpc_series = stream.fpc_series();
        n_eff_total += stats::binned_error(&fpc_series)
            .map(|e| e.n_eff)
            .unwrap_or(fpc_series.len() as f64);
        if let Ok(e) = stats::binned_error(&fpc_series) {
            part.estimates.insert("f_pc".into(), e);
        }
        replica_stats.push(part);
    }
    let merged = stats::merge_replicas(&replica_stats).map_err(|e| CliError::Other(e.to_string()))?;
    let spectrum = topology::spectrum_from_counts(&counts, n_particles, n_eff_total)
        .map_err(|e| CliError::Other(e.to_string()))?;
    Ok(MergedRun {
        spectrum,
        energy: None,
        fpc: merged.estimates.get("f_pc").copied(),
        total_samples: merged.total,
        n_particles,
        invariant_violations: violations,
        max_weight_drift: drift,
    })
}

/// Energy estimate merged over replicas at the model's beta.
pub fn merged_energy(streams: &[SampleStream], beta: f64, meta: &str) -> Option<Estimate> {
    let mut parts = Vec::new();
    for stream in streams {
        if stream.snapshots.len() >= 100 {
            if let Ok(e) = estimate_energy(stream, beta) {
                let mut part: ReplicaStats<u8> = ReplicaStats::empty(meta);
                part.estimates.insert("energy".into(), e);
                parts.push(part);
            }
        }
    }
    stats::merge_replicas(&parts)
        .ok()
        .and_then(|m| m.estimates.get("energy").copied())
}

fn spectrum_metadata(cfg: &RunConfig, merged: &MergedRun) -> serde_json::Value {
    let p = &cfg.params;
    serde_json::json!({
        "lattice": p.lattice,
        "interaction": p.interaction,
        "l": p.lattice.l,
        "v_over_t": if p.model.t > 0.0 { p.model.v / p.model.t } else { f64::NAN },
        "beta_t": p.model.beta * p.model.t,
        "mu": p.model.mu,
        "n_particles": merged.n_particles,
        "samples": merged.total_samples,
        "replicas": cfg.replicas,
        "seed": p.seed,
    })
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub merged: MergedRun,
    pub tuned_mu: Option<f64>,
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunArtifacts, CliError> {
    let mut cfg = cfg.clone();
    let out_dir = PathBuf::from(&cfg.out_dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Other(e.to_string()))?;

    let mut tuned_mu = None;
    if cfg.tune_mu {
        let lattice = build_lattice(cfg.params.lattice).map_err(|e| CliError::Other(e.to_string()))?;
        let target = cfg
            .params
            .model
            .target_particles(lattice.n_sites)
            .map_err(|e| CliError::Other(e.to_string()))?;
        let outcome = engine::tune_mu(&cfg.params, target, cfg.pilot_sweeps)?;
        if outcome.non_monotone {
            eprintln!("warning: pilot <N>(mu) not monotone within noise");
        }
        println!("tuned mu = {:.6}", outcome.mu);
        cfg.params.model.mu = outcome.mu;
        tuned_mu = Some(outcome.mu);
    }

    let log_file = std::fs::File::create(out_dir.join("run.log"))
        .map_err(|e| CliError::Other(e.to_string()))?;
    let log = Mutex::new(std::io::BufWriter::new(log_file));
    let outputs = run_replicas(&cfg, Some(&log))?;
    log.lock()
        .expect("log lock")
        .flush()
        .map_err(|e| CliError::Other(e.to_string()))?;

    let streams: Vec<SampleStream> = outputs.iter().map(|o| o.stream.clone()).collect();
    let meta = format!("{:016x}", cfg.hash);
    let mut merged = merge_streams(&streams, &meta)?;
    merged.energy = merged_energy(&streams, cfg.params.model.beta, &meta);

    let metadata = spectrum_metadata(&cfg, &merged);
    std::fs::write(out_dir.join("spectrum.csv"), merged.spectrum.to_csv())
        .map_err(|e| CliError::Other(e.to_string()))?;
    std::fs::write(
        out_dir.join("spectrum.json"),
        merged.spectrum.to_json(metadata.clone()),
    )
    .map_err(|e| CliError::Other(e.to_string()))?;
    std::fs::write(
        out_dir.join("report.csv"),
        merged.spectrum.report(cfg.report_threshold),
    )
    .map_err(|e| CliError::Other(e.to_string()))?;

    if cfg.write_samples {
        let lattice = build_lattice(cfg.params.lattice).map_err(|e| CliError::Other(e.to_string()))?;
        let header = SamplesHeader {
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: meta.clone(),
            lattice_fingerprint: lattice.fingerprint(),
            n_sites: lattice.n_sites,
            n_particles: merged.n_particles,
            params: cfg.params.clone(),
            replicas: cfg.replicas,
        };
        let checkpoints: Vec<Checkpoint> = outputs
            .iter()
            .map(|o| Checkpoint {
                lattice_fingerprint: o.lattice_fingerprint,
                model: cfg.params.model,
                rng: o.rng.clone(),
                stats: o.stream.stats.clone(),
                sweeps_done: o.stream.sweeps_run,
                samples_done: o.stream.snapshots.len() as u64,
                config: o.config.clone(),
            })
            .collect();
        artifacts::write_samples(&out_dir.join("samples.bin"), &header, &streams, &checkpoints)
            .map_err(|e| CliError::Other(e.to_string()))?;
    }

    let manifest = manifest_json(
        cfg.hash,
        cfg.params.seed,
        cfg.replicas,
        &cfg.text,
        serde_json::json!({
            "tuned_mu": tuned_mu,
            "invariant_violations": merged.invariant_violations,
            "max_weight_drift": merged.max_weight_drift,
            "energy": merged.energy,
        }),
    );
    std::fs::write(out_dir.join("manifest.json"), manifest)
        .map_err(|e| CliError::Other(e.to_string()))?;

    print_summary(&merged, cfg.report_threshold);
    Ok(RunArtifacts {
        out_dir,
        merged,
        tuned_mu,
    })
}

fn print_summary(merged: &MergedRun, threshold: f64) {
    println!(
        "collected {} samples, N = {}, {} distinct cycle vectors",
        merged.total_samples,
        merged.n_particles,
        merged.spectrum.entries.len()
    );
    if let Some(e) = &merged.energy {
        println!("energy/t = {:.6} +- {:.6}", e.mean, e.stderr);
    }
    if let Some(f) = &merged.fpc {
        println!("f_pc = {:.6} +- {:.6}", f.mean, f.stderr);
    }
    print!("{}", merged.spectrum.report(threshold));
}

pub fn cmd_analyze(
    samples_path: &str,
    out_dir: Option<&str>,
    threshold: f64,
) -> Result<(), CliError> {
    let path = Path::new(samples_path);
    let file = read_samples(path).map_err(|e| CliError::Other(e.to_string()))?;
    let out_dir = out_dir
        .map(PathBuf::from)
        .or_else(|| path.parent().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Other(e.to_string()))?;
    let streams: Vec<SampleStream> = file
        .streams
        .into_iter()
        .map(|snaps| stream_from_snapshots(file.header.n_particles, snaps))
        .collect();
    let mut merged = merge_streams(&streams, &file.header.config_hash)?;
    merged.energy = merged_energy(
        &streams,
        file.header.params.model.beta,
        &file.header.config_hash,
    );
    let metadata = serde_json::json!({
        "source": samples_path,
        "config_hash": file.header.config_hash,
        "beta_t": file.header.params.model.beta * file.header.params.model.t,
        "v_over_t": file.header.params.model.v / file.header.params.model.t.max(f64::MIN_POSITIVE),
        "n_particles": merged.n_particles,
        "samples": merged.total_samples,
    });
    std::fs::write(out_dir.join("spectrum.csv"), merged.spectrum.to_csv())
        .map_err(|e| CliError::Other(e.to_string()))?;
    std::fs::write(out_dir.join("spectrum.json"), merged.spectrum.to_json(metadata))
        .map_err(|e| CliError::Other(e.to_string()))?;
    std::fs::write(out_dir.join("report.csv"), merged.spectrum.report(threshold))
        .map_err(|e| CliError::Other(e.to_string()))?;
    print_summary(&merged, threshold);
    Ok(())
}

#[derive(serde::Serialize)]
struct StateCompare {
    fock: String,
    p_exact: f64,
    p_measured: f64,
    stderr: f64,
    z: f64,
}

#[derive(serde::Serialize)]
struct CycleCompare {
    q: String,
    p_trotter: f64,
    p_measured: f64,
    stderr: f64,
    z_after_slack: f64,
}

/// Compare a sampler run against the exact references; returns pass/fail.
pub fn cmd_oracle_compare(cfg: &RunConfig, out_dir: Option<&str>) -> Result<bool, CliError> {
    let p = &cfg.params;
    let lattice = build_lattice(p.lattice).map_err(|e| CliError::Other(e.to_string()))?;
    let table = build_interactions(&lattice, p.interaction, p.dipolar_cutoff)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let n_target = p
        .model
        .target_particles(lattice.n_sites)
        .map_err(|e| CliError::Other(e.to_string()))?;

    let spectral = match ed_solve(&lattice, &p.model, &table, n_target, EdMode::Full) {
        Ok(s) => s,
        Err(e @ OracleError::BasisTooLarge { .. }) => {
            return Err(CliError::BasisTooLarge(e.to_string()))
        }
        Err(e) => return Err(CliError::Other(e.to_string())),
    };
    let e_exact = thermal_energy(&spectral, p.model.beta).map_err(|e| CliError::Other(e.to_string()))?;
    let p_exact = thermal_diag(&spectral, p.model.beta).map_err(|e| CliError::Other(e.to_string()))?;

    let outputs = run_replicas(cfg, None)?;
    let streams: Vec<SampleStream> = outputs.into_iter().map(|o| o.stream).collect();
    let meta = format!("{:016x}", cfg.hash);
    let merged = merge_streams(&streams, &meta)?;

    let mut failures = Vec::new();

    // thermal energy
    let energy = merged_energy(&streams, p.model.beta, &meta)
        .ok_or_else(|| CliError::Other("too few samples for the energy estimator".into()))?;
    let z_energy = (energy.mean - e_exact) / energy.stderr.max(1e-12);
    if z_energy.abs() > 4.0 {
        failures.push(format!("energy z = {z_energy:.2}"));
    }

    // diagonal distribution over states with exact weight above 1 percent
    let mut state_rows = Vec::new();
    let mut chi2 = 0.0;
    for (a, &pa) in p_exact.iter().enumerate() {
        if pa <= 0.01 {
            continue;
        }
        let target = spectral.basis.mask_to_fock(spectral.basis.states[a]);
        let mut parts = Vec::new();
        for stream in &streams {
            let series: Vec<f64> = stream
                .snapshots
                .iter()
                .map(|s| (s.fock0 == target) as u8 as f64)
                .collect();
            if let Ok(est) = stats::binned_error(&series) {
                let mut part: ReplicaStats<u8> = ReplicaStats::empty(&meta);
                part.estimates.insert("p".into(), est);
                parts.push(part);
            }
        }
        let est = stats::merge_replicas(&parts)
            .ok()
            .and_then(|m| m.estimates.get("p").copied())
            .ok_or_else(|| CliError::Other("state series too short".into()))?;
        let z = (est.mean - pa) / est.stderr.max(1e-12);
        chi2 += z * z;
        if z.abs() > 4.0 {
            failures.push(format!("state {} z = {z:.2}", a));
        }
        state_rows.push(StateCompare {
            fock: target.iter().map(|n| n.to_string()).collect::<String>(),
            p_exact: pa,
            p_measured: est.mean,
            stderr: est.stderr,
            z,
        });
    }

    // permutation-cycle statistics against the labeled Trotter oracle; the
    // slice spacing must resolve the diagonal energy scale, and the dense
    // matrix powers are only affordable for small labeled dimensions
    let energy_scale = p.model.v.abs() * table.max_row_sum()
        + 2.0 * lattice.max_distinct_coordination() as f64 * p.model.t
        + 1.0 / p.model.beta;
    let d0 = (0.25 / energy_scale).min(p.model.beta / 8.0);
    let dtau = [d0, d0 / 1.6, d0 / 2.56];
    let labeled_dim: f64 = (0..n_target)
        .map(|k| (lattice.n_sites - k) as f64)
        .product();
    let slices = p.model.beta / dtau[2];
    let trotter_cost = labeled_dim.powi(3) * (slices.log2() + 3.0) * 3.0;
    let trotter_feasible = trotter_cost < 2e10;
    let mut cycle_rows = Vec::new();
    let mut trotter_residual = None;
    match if trotter_feasible {
        trotter_cycles(&lattice, &p.model, &table, n_target, &dtau)
    } else {
        Err(OracleError::DimensionTooLarge {
            size: labeled_dim as u128,
            limit: 0,
        })
    } {
        Ok(tc) => {
            trotter_residual = Some(tc.residual);
            let slack = 1e-3 + tc.residual;
            let mut keys: Vec<CycleVector> = tc
                .extrapolated
                .iter()
                .filter(|&(_, &pt)| pt > 1e-3)
                .map(|(q, _)| q.clone())
                .collect();
            for e in &merged.spectrum.entries {
                if e.prob > 1e-2 && !keys.contains(&e.q) {
                    keys.push(e.q.clone());
                }
            }
            for q in keys {
                let pt = tc.prob(&q);
                let entry = merged.spectrum.entries.iter().find(|e| e.q == q);
                let (pm, err) = entry.map(|e| (e.prob, e.err)).unwrap_or((
                    0.0,
                    1.0 / (merged.spectrum.n_eff.max(1.0)),
                ));
                let z = ((pm - pt).abs() - slack).max(0.0) / err.max(1e-12);
                if z > 4.0 {
                    failures.push(format!("cycle {} z = {z:.2}", q.label()));
                }
                cycle_rows.push(CycleCompare {
                    q: q.label(),
                    p_trotter: pt,
                    p_measured: pm,
                    stderr: err,
                    z_after_slack: z,
                });
            }
        }
        Err(OracleError::DimensionTooLarge { .. }) => {}
        Err(e) => return Err(CliError::Other(e.to_string())),
    }

    let pass = failures.is_empty();
    let report = serde_json::json!({
        "system": {
            "lattice": p.lattice,
            "interaction": p.interaction,
            "n_particles": n_target,
            "beta_t": p.model.beta * p.model.t,
            "v_over_t": p.model.v / p.model.t.max(f64::MIN_POSITIVE),
            "samples": merged.total_samples,
        },
        "energy": {
            "exact": e_exact,
            "measured": energy.mean,
            "stderr": energy.stderr,
            "z": z_energy,
        },
        "diagonal_distribution": {
            "chi2": chi2,
            "dof": state_rows.len(),
            "states": state_rows,
        },
        "cycles": {
            "trotter_residual": trotter_residual,
            "entries": cycle_rows,
        },
        "pass": pass,
        "failures": failures,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Other(e.to_string()))?;
        std::fs::write(Path::new(dir).join("report.json"), &text)
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    println!("{text}");
    Ok(pass)
}

pub fn cmd_strtree(l: usize, phase: &str, out_dir: &str) -> Result<(), CliError> {
    let set = match phase {
        "cb" => build_cb_states(l).map_err(|e| CliError::Usage(e.to_string()))?,
        "str" => build_str_states(l).map_err(|e| CliError::Usage(e.to_string()))?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown phase {other:?} (cb | str)"
            )))
        }
    };
    let (tree, depth) = optimal_tree(&set).map_err(|e| CliError::Other(e.to_string()))?;
    println!("states = {}", set.len());
    println!("info_bits = {} (log2 {})", info_content(&set), set.len());
    println!("expected_measurements = {depth}");
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Other(e.to_string()))?;
    let base = format!("strtree_{phase}_L{l}");
    std::fs::write(
        Path::new(out_dir).join(format!("{base}.json")),
        tree.to_json(),
    )
    .map_err(|e| CliError::Other(e.to_string()))?;
    std::fs::write(
        Path::new(out_dir).join(format!("{base}.txt")),
        tree.to_text(),
    )
    .map_err(|e| CliError::Other(e.to_string()))?;
    print!("{}", tree.to_text());
    Ok(())
}

pub fn presets_listing() -> String {
    let mut out = String::new();
    for p in super::presets::PRESETS {
        out.push_str(&format!("{:16} {}\n", p.name, super::presets::summary(p)));
    }
    out
}
