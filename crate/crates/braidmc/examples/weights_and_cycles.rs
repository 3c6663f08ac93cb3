//! Construct worldline configurations by hand, evaluate their weights, and
//! extract permutation cycles. Run with: cargo run --example weights_and_cycles

use braidmc::lattice::{build_interactions, build_lattice, InteractionKind, LatticeSpec, ModelSpec};
use braidmc::topology::{avg_cycle_length, f_pc, p_of};
use braidmc::worldline::{log_weight, Configuration};

fn main() {
    let lattice = build_lattice(LatticeSpec::chain(4)).unwrap();
    let table = build_interactions(&lattice, InteractionKind::NearestNeighbor, 0.0).unwrap();
    let model = ModelSpec::new(1.0, 2.0, 1.0, (3, 4), 2.0).unwrap();

    // three particles on a 4-site ring; the hole hops around once, so all
    // three worldlines join into a single 3-cycle
    let full_cycle = Configuration::with_kinks(
        4,
        model.beta,
        &[1, 1, 1, 0],
        &[(0.15, 2, 3), (0.35, 1, 2), (0.55, 0, 1), (0.7, 3, 0)],
    )
    .unwrap();

    // a pair exchange through the hole plus one straight worldline
    let pair_exchange = Configuration::with_kinks(
        4,
        model.beta,
        &[1, 1, 1, 0],
        &[(0.2, 2, 3), (0.5, 1, 2), (0.7, 3, 1)],
    )
    .unwrap();

    for (name, config) in [("full 3-cycle", &full_cycle), ("pair exchange", &pair_exchange)] {
        let q = config.permutation_cycles().unwrap();
        let n = q.n_particles();
        let lw = log_weight(config, &lattice, &model, &table).unwrap();
        println!(
            "{name}: q = ({}), kinks = {}, log weight = {:.4}",
            q.label(),
            config.n_kinks(),
            lw
        );
        let pf = p_of(&q, n).unwrap();
        println!(
            "  particle fractions p = [{}]",
            pf.p.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ")
        );
        println!(
            "  average long-cycle length = {}, f_pc = {}",
            avg_cycle_length(&q, n).unwrap(),
            f_pc(&q, n).unwrap()
        );
    }

    // weights are invariant under rotating the time origin
    let rotated = full_cycle.shift_time_origin(0.37).unwrap();
    let lw0 = log_weight(&full_cycle, &lattice, &model, &table).unwrap();
    let lw1 = log_weight(&rotated, &lattice, &model, &table).unwrap();
    println!("time-origin rotation: log weight {lw0:.12} -> {lw1:.12}");
}
