//! Long permutation cycles in a small kagome superfluid: most worldlines
//! join a few macroscopic cycles. Run with:
//! cargo run --release --example superfluid_spectrum

use braidmc::engine::{run, RunParams};
use braidmc::lattice::{InteractionKind, LatticeSpec, ModelSpec};
use braidmc::stats::binned_error;
use braidmc::topology::accumulate;

fn main() {
    // kagome, hexagon interactions at V/t=5, half filling: superfluid side
    let model = ModelSpec::new(1.0, 5.0, 25.0, (1, 2), 6.0).unwrap();
    let mut params = RunParams::new(model, LatticeSpec::kagome(2), InteractionKind::Hexagon);
    params.thermalization_sweeps = 6_000;
    params.target_samples = 15_000;
    params.measure_interval = 5;
    params.worm_fugacity = 5.0;
    params.seed = 11;

    println!("sampling kagome L=2 at V/t=5, beta t = 6 ...");
    let stream = run(&params).unwrap();
    let fpc = binned_error(&stream.fpc_series()).unwrap();
    println!(
        "{} samples, N = {}, f_pc = {:.3} +- {:.3}",
        stream.snapshots.len(),
        stream.n_particles,
        fpc.mean,
        fpc.stderr
    );
    let spectrum = accumulate(&stream.cycle_vectors()).unwrap();
    println!(
        "{} distinct cycle vectors; entries above 2%:",
        spectrum.entries.len()
    );
    print!("{}", spectrum.report(0.02));
    let longest = spectrum
        .entries
        .iter()
        .map(|e| e.q.longest_cycle())
        .max()
        .unwrap_or(0);
    println!("longest observed cycle winds {longest} times around the time circle");
}
