//! Sample the deep checkerboard phase on a 4x4 torus and print its
//! topological spectrum. Run with: cargo run --release --example sample_checkerboard

use braidmc::engine::{estimate_energy, run, InitialState, RunParams};
use braidmc::lattice::{InteractionKind, LatticeSpec, ModelSpec};
use braidmc::stats::binned_error;
use braidmc::topology::accumulate;

fn main() {
    let model = ModelSpec::new(1.0, 20.0, 40.0, (1, 2), 18.0).unwrap();
    let mut params = RunParams::new(model, LatticeSpec::square(4), InteractionKind::NearestNeighbor);
    params.thermalization_sweeps = 8_000;
    params.target_samples = 20_000;
    params.measure_interval = 10;
    params.worm_fugacity = 60.0;
    params.initial = InitialState::Checkerboard;
    params.seed = 7;

    println!("sampling square L=4 at V/t=20, beta t = 18 ...");
    let stream = run(&params).unwrap();
    let energy = estimate_energy(&stream, model.beta).unwrap();
    let fpc = binned_error(&stream.fpc_series()).unwrap();
    println!(
        "collected {} samples ({} sweeps), E/t = {:.4} +- {:.4}, f_pc = {:.5} +- {:.5}",
        stream.snapshots.len(),
        stream.sweeps_run,
        energy.mean,
        energy.stderr,
        fpc.mean,
        fpc.stderr
    );

    let spectrum = accumulate(&stream.cycle_vectors()).unwrap();
    println!("spectrum entries above 0.1%:");
    print!("{}", spectrum.report(0.001));
    println!(
        "acceptance rates: open {:.3}, insert {:.3}, delete {:.3}",
        stream.stats.acceptance(0),
        stream.stats.acceptance(3),
        stream.stats.acceptance(4)
    );
}
