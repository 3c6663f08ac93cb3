//! Tune the chemical potential so the target particle number dominates the
//! grand-canonical ensemble. Run with: cargo run --release --example tune_chemical_potential

use braidmc::engine::{run, tune_mu, RunParams};
use braidmc::lattice::{InteractionKind, LatticeSpec, ModelSpec};

fn main() {
    // half-filled 4-ring with modest repulsion; the symmetric point is
    // mu = V (each site has two neighbors)
    let model = ModelSpec::new(1.0, 2.0, 0.0, (1, 2), 4.0).unwrap();
    let mut params = RunParams::new(model, LatticeSpec::chain(4), InteractionKind::NearestNeighbor);
    params.seed = 5;

    let outcome = tune_mu(&params, 2, 4_000).unwrap();
    println!("tuned mu = {:.4} (symmetric point is 2.0)", outcome.mu);
    println!("pilot observations:");
    for obs in &outcome.observations {
        println!("  mu = {:+.4} -> <N> = {:.3} +- {:.3}", obs.mu, obs.n_mean, obs.n_err);
    }
    if outcome.non_monotone {
        println!("warning: pilot <N>(mu) non-monotone within noise");
    }

    params.model.mu = outcome.mu;
    params.thermalization_sweeps = 2_000;
    params.target_samples = 5_000;
    let stream = run(&params).unwrap();
    println!(
        "production run at tuned mu: {} snapshots at N = {}",
        stream.snapshots.len(),
        stream.n_particles
    );
}
