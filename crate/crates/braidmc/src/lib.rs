//! braidmc: worldline quantum Monte Carlo for two-dimensional hard-core
//! lattice bosons, built around permutation-cycle statistics of worldline
//! configurations.
//!
//! The library samples continuous-imaginary-time worldline configurations of
//! hard-core Bose-Hubbard models with a worm algorithm, reduces each closed
//! configuration to its permutation-cycle counts, and accumulates the
//! resulting cycle-count distribution ("topological spectrum") per ground
//! state. Small systems are cross-checked against exact diagonalization and a
//! Trotterized labeled-particle transfer matrix.
//!
//! Start with the runnable examples:
//!
//! ```text
//! cargo run --example lattice_tour
//! cargo run --example weights_and_cycles
//! cargo run --example sample_checkerboard
//! cargo run --example oracle_crosscheck
//! cargo run --example error_analysis
//! cargo run --example stripe_readout
//! cargo run --example checkpoint_roundtrip
//! ```
//!
//! A thin `braidmc` binary exposes the same flows as subcommands
//! (`run`, `analyze`, `oracle-compare`, `strtree`, `presets`).

pub mod checkpoint;
pub mod cli;
pub mod engine;
pub mod lattice;
pub mod measurement;
pub mod oracle;
pub mod stats;
pub mod topology;
pub mod rational;
pub mod worldline;
