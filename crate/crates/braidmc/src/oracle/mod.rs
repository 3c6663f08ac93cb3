//! Exact small-system references: fixed-N diagonalization (ground state,
//! thermal diagonal distribution, thermal energy) and a Trotterized
//! labeled-particle transfer matrix for permutation-cycle statistics.

mod ed;
mod fock;
mod trotter;

pub use ed::{
    ed_solve, thermal_diag, thermal_diag_energy, thermal_energy, EdMode, SectorHamiltonian,
    SpectralData,
};
pub use fock::FockBasis;
pub use trotter::{trotter_cycles, TrotterCycles};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("fixed-N basis of size {size} exceeds the {limit} limit for {mode} mode")]
    BasisTooLarge {
        size: usize,
        limit: usize,
        mode: &'static str,
    },
    #[error("labeled-particle dimension {size} exceeds the {limit} limit")]
    DimensionTooLarge { size: u128, limit: u128 },
    #[error("operation requires full-spectrum mode")]
    ModeMismatch,
    #[error("lattice of {0} sites exceeds the 63-site mask limit")]
    TooManySites(usize),
    #[error("dtau extrapolation unstable: residual {residual:.3e} > {limit:.1e}")]
    ExtrapolationUnstable { residual: f64, limit: f64 },
    #[error("need at least {need} dtau values, got {got}")]
    TooFewDtau { got: usize, need: usize },
    #[error("ground-state iteration did not converge: residual {0:.3e}")]
    NotConverged(f64),
    #[error("invalid sector: {0}")]
    BadSector(String),
}
