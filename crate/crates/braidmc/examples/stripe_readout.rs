//! Minimal site-measurement protocols for the degenerate checkerboard and
//! stripe manifolds. Run with: cargo run --example stripe_readout

use braidmc::measurement::{build_cb_states, build_str_states, info_content, optimal_tree};

fn main() {
    let cb = build_cb_states(4).unwrap();
    let (cb_tree, cb_depth) = optimal_tree(&cb).unwrap();
    println!(
        "checkerboard L=4: {} states, {:.3} bits, expected measurements = {cb_depth}",
        cb.len(),
        info_content(&cb)
    );
    print!("{}", cb_tree.to_text());

    let stripes = build_str_states(6).unwrap();
    let (tree, depth) = optimal_tree(&stripes).unwrap();
    println!(
        "\nstripes L=6: {} states, {:.3} bits, expected measurements = {depth}",
        stripes.len(),
        info_content(&stripes)
    );
    println!(
        "leaf depths: {:?}",
        tree.leaf_depths().iter().map(|&(_, d)| d).collect::<Vec<_>>()
    );
    print!("{}", tree.to_text());

    // replay each stripe state through the protocol
    for (i, state) in stripes.states.iter().enumerate() {
        assert_eq!(tree.classify(state), i);
    }
    println!("\nall six stripe states identified correctly");
}
