//! Build the supported lattices and interaction tables and show their
//! structure. Run with: cargo run --example lattice_tour

use braidmc::lattice::{
    build_interactions, build_lattice, diagonal_energy, InteractionKind, LatticeSpec,
};

fn main() {
    let square = build_lattice(LatticeSpec::square(4)).unwrap();
    println!(
        "square L=4: {} sites, {} bond slots, duplicates: {}",
        square.n_sites,
        square.bonds.len(),
        square.duplicate_bonds
    );
    let nn = build_interactions(&square, InteractionKind::NearestNeighbor, 0.0).unwrap();
    println!("  nearest-neighbor pairs: {}", nn.pairs.len());

    let wide = build_lattice(LatticeSpec::square(12)).unwrap();
    let dipolar = build_interactions(&wide, InteractionKind::Dipolar, 4.0).unwrap();
    println!(
        "square L=12 dipolar r<=4: {} pairs, max row sum {:.4}",
        dipolar.pairs.len(),
        dipolar.max_row_sum()
    );

    let kagome = build_lattice(LatticeSpec::kagome(3)).unwrap();
    let hex = build_interactions(&kagome, InteractionKind::Hexagon, 0.0).unwrap();
    println!(
        "kagome L=3: {} sites, {} bond slots, {} hexagons, hexagon pairs {}",
        kagome.n_sites,
        kagome.bonds.len(),
        kagome.hexagons.len(),
        hex.pairs.len()
    );

    // diagonal energy of a checkerboard state on the 4x4 torus
    let cb: Vec<u8> = (0..16).map(|s| ((s % 4 + s / 4) % 2 == 0) as u8).collect();
    println!(
        "checkerboard diagonal energy at V=20: {}",
        diagonal_energy(&cb, &nn, 20.0, 0.0)
    );

    // lattices serialize to JSON for external tooling
    let json = kagome.to_json();
    println!(
        "kagome JSON dump: {} bytes, starts with {}",
        json.len(),
        &json[..40.min(json.len())]
    );
}
