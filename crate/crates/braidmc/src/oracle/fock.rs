//! Fixed-particle-number Fock basis over bitmask states.

use super::OracleError;
use crate::lattice::FockState;
use std::collections::HashMap;

/// All C(M, N) occupation vectors of N particles on M sites, in
/// lexicographic order of the vector (n_0, n_1, ...), with both-way index
/// maps. Site i occupies bit i of the mask.
#[derive(Clone, Debug)]
pub struct FockBasis {
    pub n_sites: usize,
    pub n_particles: usize,
    pub states: Vec<u64>,
    index: HashMap<u64, usize>,
}

pub(crate) fn binomial(m: u64, n: u64) -> u128 {
    if n > m {
        return 0;
    }
    let n = n.min(m - n);
    let mut acc: u128 = 1;
    for i in 0..n {
        acc = acc * (m - i) as u128 / (i + 1) as u128;
    }
    acc
}

impl FockBasis {
    pub fn new(n_sites: usize, n_particles: usize) -> Result<Self, OracleError> {
        if n_sites > 63 {
            return Err(OracleError::TooManySites(n_sites));
        }
        if n_particles > n_sites {
            return Err(OracleError::BadSector(format!(
                "{n_particles} particles on {n_sites} sites"
            )));
        }
        let size = binomial(n_sites as u64, n_particles as u64) as usize;
        let mut states = Vec::with_capacity(size);
        if n_particles == 0 {
            states.push(0);
        } else {
            // Vector-lexicographic order equals numeric order of the
            // bit-reversed mask; Gosper's hack walks same-popcount integers
            // in increasing order.
            let limit = 1u64 << n_sites;
            let mut rev: u64 = (1u64 << n_particles) - 1;
            loop {
                let mut mask = 0u64;
                for k in 0..n_sites {
                    if (rev >> k) & 1 == 1 {
                        mask |= 1 << (n_sites - 1 - k);
                    }
                }
                states.push(mask);
                let u = rev & rev.wrapping_neg();
                let v = rev + u;
                if v >= limit {
                    break;
                }
                rev = v | (((rev ^ v) / u) >> 2);
            }
        }
        debug_assert_eq!(states.len(), size);
        let index = states.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        Ok(FockBasis {
            n_sites,
            n_particles,
            states,
            index,
        })
    }

    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    pub fn mask_to_fock(&self, mask: u64) -> FockState {
        (0..self.n_sites).map(|s| ((mask >> s) & 1) as u8).collect()
    }

    pub fn fock_to_mask(fock: &[u8]) -> u64 {
        fock.iter()
            .enumerate()
            .fold(0u64, |m, (s, &n)| m | ((n as u64) << s))
    }
}
