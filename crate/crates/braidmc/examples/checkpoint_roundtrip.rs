//! Save a sampler state mid-run and show that resuming reproduces the
//! uninterrupted chain exactly. Run with: cargo run --example checkpoint_roundtrip

use braidmc::checkpoint::Checkpoint;
use braidmc::engine::WormSampler;
use braidmc::lattice::{build_interactions, build_lattice, InteractionKind, LatticeSpec, ModelSpec};

fn main() {
    let lattice = build_lattice(LatticeSpec::square(3)).unwrap();
    let table = build_interactions(&lattice, InteractionKind::NearestNeighbor, 0.0).unwrap();
    let model = ModelSpec::new(1.0, 2.0, 4.0, (1, 3), 3.0).unwrap();
    let fock0: Vec<u8> = (0..9).map(|s| (s % 3 == 0) as u8).collect();

    // reference chain, uninterrupted
    let mut reference = WormSampler::new(&lattice, &table, &model, &fock0, 123, 1.0);
    for _ in 0..2_000 {
        reference.sweep();
    }

    // same chain, checkpointed halfway
    let mut first_half = WormSampler::new(&lattice, &table, &model, &fock0, 123, 1.0);
    for _ in 0..1_000 {
        first_half.sweep();
    }
    let checkpoint = Checkpoint {
        lattice_fingerprint: lattice.fingerprint(),
        model,
        rng: first_half.rng.clone(),
        stats: first_half.stats.clone(),
        sweeps_done: 1_000,
        samples_done: 0,
        config: first_half.config.clone(),
    };
    let mut bytes = Vec::new();
    checkpoint.write_to(&mut bytes).unwrap();
    println!("checkpoint written: {} bytes", bytes.len());

    let loaded = Checkpoint::read_from(&mut bytes.as_slice()).unwrap();
    let mut resumed = WormSampler::new(&lattice, &table, &model, &fock0, 0, 1.0);
    resumed.config = loaded.config;
    resumed.rng = loaded.rng;
    resumed.stats = loaded.stats;
    for _ in 0..1_000 {
        resumed.sweep();
    }

    println!(
        "kinks: reference {}, resumed {}",
        reference.config.n_kinks(),
        resumed.config.n_kinks()
    );
    assert_eq!(reference.config.n_kinks(), resumed.config.n_kinks());
    assert_eq!(reference.stats.proposed, resumed.stats.proposed);
    assert_eq!(
        reference.config.fock_state(0.0).ok(),
        resumed.config.fock_state(0.0).ok()
    );
    println!("resumed chain matches the uninterrupted one exactly");
    println!("\ndebug header:\n{}", &loaded_debug(&checkpoint)[..400]);
}

fn loaded_debug(ck: &Checkpoint) -> String {
    ck.to_debug_json()
}
