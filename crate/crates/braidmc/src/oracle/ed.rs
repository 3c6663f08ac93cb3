//! Fixed-N exact diagonalization: dense full spectrum for thermal sums,
//! restarted Lanczos for ground states of larger sectors.
//!
//! The chemical potential is deliberately excluded here: it is a sampling
//! control and shifts every fixed-N level by the same -mu*N.

use super::fock::FockBasis;
use super::OracleError;
use crate::lattice::{diagonal_energy, InteractionTable, Lattice, ModelSpec};
use nalgebra::{DMatrix, DVector};

const FULL_LIMIT: usize = 4_000;
const GROUND_LIMIT: usize = 200_000;
const LANCZOS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdMode {
    Ground,
    Full,
}

/// Sparse fixed-N sector Hamiltonian H = -t sum over bond slots of
/// (a+ a + h.c.) + V sum c_ij n_i n_j.
pub struct SectorHamiltonian {
    pub basis: FockBasis,
    pub diag: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SectorHamiltonian {
    pub fn build(
        lattice: &Lattice,
        model: &ModelSpec,
        table: &InteractionTable,
        n_particles: usize,
    ) -> Result<Self, OracleError> {
        let basis = FockBasis::new(lattice.n_sites, n_particles)?;
        let dim = basis.size();
        let mut diag = Vec::with_capacity(dim);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for (a, &mask) in basis.states.iter().enumerate() {
            let fock = basis.mask_to_fock(mask);
            diag.push(diagonal_energy(&fock, table, model.v, 0.0));
            for &(i, j) in &lattice.bonds {
                for (from, to) in [(i, j), (j, i)] {
                    if (mask >> from) & 1 == 1 && (mask >> to) & 1 == 0 {
                        let flipped = (mask & !(1 << from)) | (1 << to);
                        let b = basis.index_of(flipped).expect("hop stays in sector");
                        rows[a].push((b, -model.t));
                    }
                }
            }
        }
        // merge duplicate columns (multiple bond slots joining one pair)
        for row in &mut rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            *row = merged;
        }
        Ok(SectorHamiltonian { basis, diag, rows })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        for a in 0..self.dim() {
            let mut acc = self.diag[a] * x[a];
            for &(b, v) in &self.rows[a] {
                acc += v * x[b];
            }
            y[a] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for a in 0..dim {
            h[(a, a)] = self.diag[a];
            for &(b, v) in &self.rows[a] {
                h[(a, b)] += v;
            }
        }
        h
    }
}

/// Eigen data of a fixed-N sector.
pub struct SpectralData {
    pub basis: FockBasis,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub ground: DVector<f64>,
    /// Columns are eigenvectors matching `eigenvalues`; full mode only.
    pub eigenvectors: Option<DMatrix<f64>>,
}

impl SpectralData {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Diagonalize the fixed-N sector. `Ground` uses restarted Lanczos with full
/// reorthogonalization (residual below 1e-10); `Full` uses a dense symmetric
/// eigendecomposition and enables the thermal sums.
pub fn ed_solve(
    lattice: &Lattice,
    model: &ModelSpec,
    table: &InteractionTable,
    n_particles: usize,
    mode: EdMode,
) -> Result<SpectralData, OracleError> {
    let h = SectorHamiltonian::build(lattice, model, table, n_particles)?;
    let dim = h.dim();
    let limit = match mode {
        EdMode::Full => FULL_LIMIT,
        EdMode::Ground => GROUND_LIMIT,
    };
    if dim > limit {
        return Err(OracleError::BasisTooLarge {
            size: dim,
            limit,
            mode: match mode {
                EdMode::Full => "full",
                EdMode::Ground => "ground",
            },
        });
    }
    match mode {
        EdMode::Full => {
            let eig = h.to_dense().symmetric_eigen();
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
            let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let mut vectors = DMatrix::zeros(dim, dim);
            for (k, &i) in order.iter().enumerate() {
                vectors.set_column(k, &eig.eigenvectors.column(i));
            }
            let mut ground = vectors.column(0).clone_owned();
            fix_sign(&mut ground);
            Ok(SpectralData {
                basis: h.basis,
                eigenvalues,
                ground,
                eigenvectors: Some(vectors),
            })
        }
        EdMode::Ground => {
            let (e0, mut ground) = lanczos_ground(&h)?;
            fix_sign(&mut ground);
            Ok(SpectralData {
                basis: h.basis,
                eigenvalues: vec![e0],
                ground,
                eigenvectors: None,
            })
        }
    }
}

fn fix_sign(v: &mut DVector<f64>) {
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn lanczos_ground(h: &SectorHamiltonian) -> Result<(f64, DVector<f64>), OracleError> {
    let dim = h.dim();
    if dim == 1 {
        return Ok((h.diag[0], DVector::from_element(1, 1.0)));
    }
    let block = 200.min(dim);
    let mut v = DVector::from_element(dim, 1.0 / (dim as f64).sqrt());
    let mut last_residual = f64::INFINITY;
    for _restart in 0..60 {
        let mut basis: Vec<DVector<f64>> = vec![v.clone()];
        let mut alphas: Vec<f64> = Vec::with_capacity(block);
        let mut betas: Vec<f64> = Vec::new();
        let mut w = DVector::zeros(dim);
        for j in 0..block {
            h.matvec(&basis[j], &mut w);
            let alpha = basis[j].dot(&w);
            alphas.push(alpha);
            let mut r = w.clone();
            // full reorthogonalization, twice for stability
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&r);
                    r.axpy(-c, q, 1.0);
                }
            }
            let beta = r.norm();
            if beta < 1e-14 || j + 1 == block {
                break;
            }
            betas.push(beta);
            basis.push(r / beta);
        }
        let m = alphas.len();
        let mut tri = DMatrix::zeros(m, m);
        for i in 0..m {
            tri[(i, i)] = alphas[i];
            if i + 1 < m {
                tri[(i, i + 1)] = betas[i];
                tri[(i + 1, i)] = betas[i];
            }
        }
        let eig = tri.symmetric_eigen();
        let k0 = (0..m)
            .min_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap())
            .unwrap();
        let theta = eig.eigenvalues[k0];
        let y = eig.eigenvectors.column(k0);
        let mut x = DVector::zeros(dim);
        for (j, q) in basis.iter().enumerate() {
            x.axpy(y[j], q, 1.0);
        }
        x /= x.norm();
        h.matvec(&x, &mut w);
        let residual = (&w - theta * &x).norm() / theta.abs().max(1.0);
        if residual <= LANCZOS_TOL {
            return Ok((theta, x));
        }
        last_residual = residual;
        v = x;
    }
    Err(OracleError::NotConverged(last_residual))
}

/// Thermal diagonal distribution p(alpha) over the fixed-N basis.
pub fn thermal_diag(spectral: &SpectralData, beta: f64) -> Result<Vec<f64>, OracleError> {
    let vectors = spectral
        .eigenvectors
        .as_ref()
        .ok_or(OracleError::ModeMismatch)?;
    let e0 = spectral.eigenvalues[0];
    let weights: Vec<f64> = spectral
        .eigenvalues
        .iter()
        .map(|e| (-beta * (e - e0)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let dim = spectral.basis.size();
    let mut p = vec![0.0; dim];
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let col = vectors.column(k);
        for a in 0..dim {
            p[a] += col[a] * col[a] * w;
        }
    }
    for x in &mut p {
        *x /= z;
    }
    Ok(p)
}

/// Canonical thermal energy of the sector at inverse temperature beta.
pub fn thermal_energy(spectral: &SpectralData, beta: f64) -> Result<f64, OracleError> {
    if spectral.eigenvectors.is_none() {
        return Err(OracleError::ModeMismatch);
    }
    let e0 = spectral.eigenvalues[0];
    let mut z = 0.0;
    let mut acc = 0.0;
    for &e in &spectral.eigenvalues {
        let w = (-beta * (e - e0)).exp();
        z += w;
        acc += e * w;
    }
    Ok(acc / z)
}

/// Thermal expectation of the diagonal part alone (interaction term, V
/// included, mu excluded).
pub fn thermal_diag_energy(
    spectral: &SpectralData,
    h: &SectorHamiltonian,
    beta: f64,
) -> Result<f64, OracleError> {
    let p = thermal_diag(spectral, beta)?;
    Ok(p.iter().zip(&h.diag).map(|(pi, ei)| pi * ei).sum())
}
