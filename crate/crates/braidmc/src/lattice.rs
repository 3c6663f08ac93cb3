//! Periodic lattices (square, kagome, chain), their hopping-bond tables, and
//! the diagonal interaction tables of the supported model variants.
//!
//! Everything here is immutable after construction and safe to share across
//! workers.

use crate::rational::fnv1a64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Occupation vector, one 0/1 entry per site.
pub type FockState = Vec<u8>;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("linear size {0} too small; need at least 2")]
    TooSmall(usize),
    #[error("interaction model {model:?} is not defined on a {lattice:?} lattice")]
    IncompatibleModel {
        model: InteractionKind,
        lattice: LatticeKind,
    },
    #[error("dipolar cutoff {cutoff} exceeds half the shortest period {half_period}")]
    CutoffTooLarge { cutoff: f64, half_period: f64 },
    #[error("hard-core constraint violated: expected n[{i}]=1, n[{j}]=0")]
    HardCoreViolation { i: usize, j: usize },
    #[error("invalid model parameter: {0}")]
    BadParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Square,
    Kagome,
    /// 1D ring (open dimer at l=2); used by the small-system oracles.
    Chain,
}

/// Requested lattice geometry. `l` counts sites per side for square, unit
/// cells per side for kagome, sites for chain. `l2` optionally makes a
/// rectangular square-kind lattice (l columns by l2 rows).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub l: usize,
    #[serde(default)]
    pub l2: Option<usize>,
}

impl LatticeSpec {
    pub fn square(l: usize) -> Self {
        LatticeSpec {
            kind: LatticeKind::Square,
            l,
            l2: None,
        }
    }

    pub fn rect(lx: usize, ly: usize) -> Self {
        LatticeSpec {
            kind: LatticeKind::Square,
            l: lx,
            l2: Some(ly),
        }
    }

    pub fn kagome(l: usize) -> Self {
        LatticeSpec {
            kind: LatticeKind::Kagome,
            l,
            l2: None,
        }
    }

    pub fn chain(l: usize) -> Self {
        LatticeSpec {
            kind: LatticeKind::Chain,
            l,
            l2: None,
        }
    }
}

/// Realized lattice: indexed sites with 2D coordinates, hopping-bond slots,
/// per-site neighbor lists, and (kagome) hexagon rings.
///
/// Bond slots are kept distinct even when periodic wrap makes two slots join
/// the same site pair (l=2 square); `duplicate_bonds` flags that case and
/// `neighbors` folds the multiplicity instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lattice {
    pub spec: LatticeSpec,
    pub n_sites: usize,
    pub coords: Vec<(f64, f64)>,
    /// Hopping bond slots as ordered (low, high) site pairs.
    pub bonds: Vec<(usize, usize)>,
    /// Distinct hop neighbors per site with slot multiplicity.
    pub neighbors: Vec<Vec<(usize, u32)>>,
    /// 6-site rings; kagome only.
    pub hexagons: Vec<[usize; 6]>,
    pub duplicate_bonds: bool,
}

impl Lattice {
    pub fn max_distinct_coordination(&self) -> usize {
        self.neighbors.iter().map(|n| n.len()).max().unwrap_or(0)
    }

    /// Site relabelings generated by the elementary lattice translations
    /// (one step along each periodic direction, both ways); the open dimer
    /// gets its reflection instead. All are automorphisms of both the
    /// hopping and interaction graphs.
    pub fn translation_maps(&self) -> Vec<Vec<usize>> {
        match self.spec.kind {
            LatticeKind::Square => {
                let lx = self.spec.l;
                let ly = self.spec.l2.unwrap_or(self.spec.l);
                let idx = |x: usize, y: usize| (y % ly) * lx + (x % lx);
                let shift = |dx: usize, dy: usize| {
                    (0..self.n_sites)
                        .map(|s| idx(s % lx + dx, s / lx + dy))
                        .collect::<Vec<_>>()
                };
                vec![
                    shift(1, 0),
                    shift(lx - 1, 0),
                    shift(0, 1),
                    shift(0, ly - 1),
                ]
            }
            LatticeKind::Kagome => {
                let l = self.spec.l;
                let site = |m: usize, n: usize, b: usize| ((n % l) * l + (m % l)) * 3 + b;
                let shift = |dm: usize, dn: usize| {
                    (0..self.n_sites)
                        .map(|s| {
                            let b = s % 3;
                            let cell = s / 3;
                            site(cell % l + dm, cell / l + dn, b)
                        })
                        .collect::<Vec<_>>()
                };
                vec![
                    shift(1, 0),
                    shift(l - 1, 0),
                    shift(0, 1),
                    shift(0, l - 1),
                ]
            }
            LatticeKind::Chain => {
                let l = self.spec.l;
                if l == 2 {
                    vec![vec![1, 0]]
                } else {
                    vec![
                        (0..l).map(|s| (s + 1) % l).collect(),
                        (0..l).map(|s| (s + l - 1) % l).collect(),
                    ]
                }
            }
        }
    }

    /// Stable fingerprint of the geometry, embedded in checkpoints.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(format!("{:?}", self.spec).as_bytes());
        for &(a, b) in &self.bonds {
            bytes.extend_from_slice(&(a as u64).to_le_bytes());
            bytes.extend_from_slice(&(b as u64).to_le_bytes());
        }
        fnv1a64(&bytes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lattice serializes")
    }
}

/// Build a lattice from its spec. Site indexing is deterministic: row-major
/// cells, fixed basis order within a kagome cell.
pub fn build_lattice(spec: LatticeSpec) -> Result<Lattice, LatticeError> {
    if spec.l < 2 {
        return Err(LatticeError::TooSmall(spec.l));
    }
    match spec.kind {
        LatticeKind::Square => build_square(spec),
        LatticeKind::Kagome => build_kagome(spec),
        LatticeKind::Chain => build_chain(spec),
    }
}

fn fold_neighbors(n_sites: usize, bonds: &[(usize, usize)]) -> Vec<Vec<(usize, u32)>> {
    let mut nbrs: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n_sites];
    let mut push = |s: usize, o: usize| {
        let list = &mut nbrs[s];
        match list.iter_mut().find(|(site, _)| *site == o) {
            Some((_, m)) => *m += 1,
            None => list.push((o, 1)),
        }
    };
    for &(a, b) in bonds {
        push(a, b);
        push(b, a);
    }
    for list in &mut nbrs {
        list.sort_unstable();
    }
    nbrs
}

fn build_square(spec: LatticeSpec) -> Result<Lattice, LatticeError> {
    let lx = spec.l;
    let ly = spec.l2.unwrap_or(spec.l);
    if ly < 2 {
        return Err(LatticeError::TooSmall(ly));
    }
    let n_sites = lx * ly;
    let idx = |x: usize, y: usize| (y % ly) * lx + (x % lx);
    let mut coords = Vec::with_capacity(n_sites);
    let mut bonds = Vec::with_capacity(2 * n_sites);
    for y in 0..ly {
        for x in 0..lx {
            coords.push((x as f64, y as f64));
        }
    }
    for y in 0..ly {
        for x in 0..lx {
            let s = idx(x, y);
            let right = idx(x + 1, y);
            let up = idx(x, y + 1);
            bonds.push((s.min(right), s.max(right)));
            bonds.push((s.min(up), s.max(up)));
        }
    }
    let duplicate_bonds = lx == 2 || ly == 2;
    Ok(Lattice {
        spec,
        n_sites,
        coords,
        neighbors: fold_neighbors(n_sites, &bonds),
        bonds,
        hexagons: Vec::new(),
        duplicate_bonds,
    })
}

fn build_chain(spec: LatticeSpec) -> Result<Lattice, LatticeError> {
    let l = spec.l;
    let mut bonds: Vec<(usize, usize)> = (0..l - 1).map(|i| (i, i + 1)).collect();
    if l >= 3 {
        bonds.push((0, l - 1));
    }
    Ok(Lattice {
        spec,
        n_sites: l,
        coords: (0..l).map(|i| (i as f64, 0.0)).collect(),
        neighbors: fold_neighbors(l, &bonds),
        bonds,
        hexagons: Vec::new(),
        duplicate_bonds: false,
    })
}

fn build_kagome(spec: LatticeSpec) -> Result<Lattice, LatticeError> {
    let l = spec.l;
    let n_sites = 3 * l * l;
    // Cell (m, n) sits at m*a1 + n*a2 with a1 = (2, 0), a2 = (1, sqrt(3)).
    // Basis: A = (0,0), B = (1,0), C = (1/2, sqrt(3)/2); NN distance 1.
    let site = |m: usize, n: usize, basis: usize| ((n % l) * l + (m % l)) * 3 + basis;
    let sq3 = 3f64.sqrt();
    let mut coords = vec![(0.0, 0.0); n_sites];
    let mut bonds = Vec::with_capacity(6 * l * l);
    let mut hexagons = Vec::with_capacity(l * l);
    for n in 0..l {
        for m in 0..l {
            let ox = 2.0 * m as f64 + n as f64;
            let oy = sq3 * n as f64;
            let a = site(m, n, 0);
            let b = site(m, n, 1);
            let c = site(m, n, 2);
            coords[a] = (ox, oy);
            coords[b] = (ox + 1.0, oy);
            coords[c] = (ox + 0.5, oy + 0.5 * sq3);
            // up triangle within the cell
            bonds.push((a.min(b), a.max(b)));
            bonds.push((a.min(c), a.max(c)));
            bonds.push((b.min(c), b.max(c)));
            // down triangle: B(m,n), A(m+1,n), C(m+1,n-1)
            let a_r = site(m + 1, n, 0);
            let c_dr = site(m + 1, n + l - 1, 2);
            bonds.push((b.min(a_r), b.max(a_r)));
            bonds.push((b.min(c_dr), b.max(c_dr)));
            bonds.push((a_r.min(c_dr), a_r.max(c_dr)));
            // hexagon ring around the hole of cell (m, n)
            hexagons.push([
                site(m, n, 1),
                site(m + 1, n, 0),
                site(m + 1, n, 2),
                site(m, n + 1, 1),
                site(m, n + 1, 0),
                site(m, n, 2),
            ]);
        }
    }
    Ok(Lattice {
        spec,
        n_sites,
        coords,
        neighbors: fold_neighbors(n_sites, &bonds),
        bonds,
        hexagons,
        duplicate_bonds: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    /// V sum over hop bonds of n_i n_j (square or kagome; also used with
    /// V = 0 on chains).
    NearestNeighbor,
    /// V sum over pairs within the minimal-image cutoff of n_i n_j / r^3
    /// (square only).
    Dipolar,
    /// V sum over all site pairs sharing a kagome hexagon of n_i n_j; pairs
    /// shared by two hexagons carry the summed coefficient.
    Hexagon,
}

/// Diagonal interaction pair table; coefficients are in units of V.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InteractionTable {
    pub kind: InteractionKind,
    /// Unordered pairs (i < j) with coefficient.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Per-site adjacency: (other site, coefficient).
    pub per_site: Vec<Vec<(usize, f64)>>,
}

impl InteractionTable {
    pub fn max_row_sum(&self) -> f64 {
        self.per_site
            .iter()
            .map(|row| row.iter().map(|&(_, c)| c).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("interaction table serializes")
    }

    fn from_pairs(kind: InteractionKind, n_sites: usize, raw: Vec<(usize, usize, f64)>) -> Self {
        let mut merged: std::collections::BTreeMap<(usize, usize), f64> =
            std::collections::BTreeMap::new();
        for (a, b, c) in raw {
            let key = (a.min(b), a.max(b));
            *merged.entry(key).or_insert(0.0) += c;
        }
        let pairs: Vec<(usize, usize, f64)> =
            merged.into_iter().map(|((a, b), c)| (a, b, c)).collect();
        let mut per_site: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_sites];
        for &(a, b, c) in &pairs {
            per_site[a].push((b, c));
            per_site[b].push((a, c));
        }
        InteractionTable {
            kind,
            pairs,
            per_site,
        }
    }
}

/// Build the diagonal interaction table for a model variant. `cutoff` is only
/// read by the dipolar model.
pub fn build_interactions(
    lattice: &Lattice,
    kind: InteractionKind,
    cutoff: f64,
) -> Result<InteractionTable, LatticeError> {
    match (kind, lattice.spec.kind) {
        (InteractionKind::NearestNeighbor, _) => {
            let raw = lattice
                .bonds
                .iter()
                .map(|&(a, b)| (a, b, 1.0))
                .collect::<Vec<_>>();
            Ok(InteractionTable::from_pairs(kind, lattice.n_sites, raw))
        }
        (InteractionKind::Dipolar, LatticeKind::Square) => {
            let lx = lattice.spec.l as i64;
            let ly = lattice.spec.l2.unwrap_or(lattice.spec.l) as i64;
            let half = lx.min(ly) as f64 / 2.0;
            if cutoff > half {
                return Err(LatticeError::CutoffTooLarge {
                    cutoff,
                    half_period: half,
                });
            }
            let min_image = |d: i64, period: i64| {
                let d = d.rem_euclid(period);
                d.min(period - d)
            };
            let mut raw = Vec::new();
            let r2_max = cutoff * cutoff + 1e-9;
            for a in 0..lattice.n_sites {
                let (ax, ay) = (a as i64 % lx, a as i64 / lx);
                for b in (a + 1)..lattice.n_sites {
                    let (bx, by) = (b as i64 % lx, b as i64 / lx);
                    let dx = min_image(bx - ax, lx);
                    let dy = min_image(by - ay, ly);
                    let r2 = (dx * dx + dy * dy) as f64;
                    if r2 > 0.0 && r2 <= r2_max {
                        raw.push((a, b, r2.powf(-1.5)));
                    }
                }
            }
            Ok(InteractionTable::from_pairs(kind, lattice.n_sites, raw))
        }
        (InteractionKind::Hexagon, LatticeKind::Kagome) => {
            let mut raw = Vec::new();
            for hex in &lattice.hexagons {
                for i in 0..6 {
                    for j in (i + 1)..6 {
                        raw.push((hex[i], hex[j], 1.0));
                    }
                }
            }
            Ok(InteractionTable::from_pairs(kind, lattice.n_sites, raw))
        }
        (model, lattice_kind) => Err(LatticeError::IncompatibleModel {
            model,
            lattice: lattice_kind,
        }),
    }
}

/// Hamiltonian parameters. Energies are in the same units as `t`; `mu` is a
/// sampling control only and cancels in fixed-N observables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub t: f64,
    pub v: f64,
    pub mu: f64,
    /// Target filling as a fraction (numerator, denominator).
    pub filling: (u32, u32),
    pub beta: f64,
}

impl ModelSpec {
    pub fn new(t: f64, v: f64, mu: f64, filling: (u32, u32), beta: f64) -> Result<Self, LatticeError> {
        if t < 0.0 || !t.is_finite() {
            return Err(LatticeError::BadParameter(format!("t = {t} must be >= 0")));
        }
        if beta <= 0.0 || !beta.is_finite() {
            return Err(LatticeError::BadParameter(format!("beta = {beta} must be > 0")));
        }
        let (num, den) = filling;
        if den == 0 || num == 0 || num >= den {
            return Err(LatticeError::BadParameter(format!(
                "filling {num}/{den} must lie strictly in (0, 1)"
            )));
        }
        Ok(ModelSpec {
            t,
            v,
            mu,
            filling,
            beta,
        })
    }

    pub fn target_particles(&self, n_sites: usize) -> Result<usize, LatticeError> {
        let (num, den) = self.filling;
        let total = n_sites * num as usize;
        if total % den as usize != 0 {
            return Err(LatticeError::BadParameter(format!(
                "filling {}/{} does not divide {} sites",
                num, den, n_sites
            )));
        }
        Ok(total / den as usize)
    }
}

/// V * sum c_ij n_i n_j - mu * N, exactly over 0/1 occupancies.
pub fn diagonal_energy(fock: &[u8], table: &InteractionTable, v: f64, mu: f64) -> f64 {
    let mut pair_sum = 0.0;
    for &(a, b, c) in &table.pairs {
        if fock[a] == 1 && fock[b] == 1 {
            pair_sum += c;
        }
    }
    let n: u32 = fock.iter().map(|&x| x as u32).sum();
    v * pair_sum - mu * n as f64
}

/// Diagonal energy change of the hop i -> j, touching only the interaction
/// neighbors of i and j.
pub fn energy_delta_hop(
    fock: &[u8],
    i: usize,
    j: usize,
    table: &InteractionTable,
    v: f64,
) -> Result<f64, LatticeError> {
    if fock[i] != 1 || fock[j] != 0 {
        return Err(LatticeError::HardCoreViolation { i, j });
    }
    let mut gained = 0.0;
    for &(k, c) in &table.per_site[j] {
        if k != i && fock[k] == 1 {
            gained += c;
        }
    }
    let mut lost = 0.0;
    for &(k, c) in &table.per_site[i] {
        if fock[k] == 1 {
            lost += c;
        }
    }
    Ok(v * (gained - lost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_pcg::Pcg64;

    fn checkerboard(lx: usize, ly: usize) -> FockState {
        (0..lx * ly)
            .map(|s| (((s % lx) + (s / lx)) % 2 == 0) as u8)
            .collect()
    }

    #[test]
    fn square_l4_structure() {
        let lat = build_lattice(LatticeSpec::square(4)).unwrap();
        assert_eq!(lat.n_sites, 16);
        assert_eq!(lat.bonds.len(), 32);
        assert!(!lat.duplicate_bonds);
        for nbr in &lat.neighbors {
            let slots: u32 = nbr.iter().map(|&(_, m)| m).sum();
            assert_eq!(slots, 4);
            assert_eq!(nbr.len(), 4);
        }
    }

    #[test]
    fn kagome_l2_structure() {
        let lat = build_lattice(LatticeSpec::kagome(2)).unwrap();
        assert_eq!(lat.n_sites, 12);
        assert_eq!(lat.bonds.len(), 24);
        assert_eq!(lat.hexagons.len(), 4);
        let mut membership = vec![0usize; lat.n_sites];
        for hex in &lat.hexagons {
            let mut sites = hex.to_vec();
            sites.sort_unstable();
            sites.dedup();
            assert_eq!(sites.len(), 6, "hexagon sites must be distinct");
            for &s in hex {
                membership[s] += 1;
            }
        }
        assert!(membership.iter().all(|&m| m == 2));
        for nbr in &lat.neighbors {
            let slots: u32 = nbr.iter().map(|&(_, m)| m).sum();
            assert_eq!(slots, 4);
        }
    }

    #[test]
    fn kagome_membership_sum_is_twice_site_count() {
        for l in [2usize, 3, 4] {
            let lat = build_lattice(LatticeSpec::kagome(l)).unwrap();
            assert_eq!(lat.hexagons.len() * 6, 2 * lat.n_sites);
            assert_eq!(lat.bonds.len(), 6 * l * l);
        }
    }

    #[test]
    fn square_l2_duplicate_bond_slots() {
        let lat = build_lattice(LatticeSpec::square(2)).unwrap();
        assert_eq!(lat.n_sites, 4);
        assert_eq!(lat.bonds.len(), 8);
        assert!(lat.duplicate_bonds);
        // each site has 2 distinct neighbors, each via 2 slots
        for nbr in &lat.neighbors {
            assert_eq!(nbr.len(), 2);
            assert!(nbr.iter().all(|&(_, m)| m == 2));
        }
    }

    #[test]
    fn reject_too_small() {
        assert!(build_lattice(LatticeSpec::square(1)).is_err());
        assert!(build_lattice(LatticeSpec::kagome(1)).is_err());
        assert!(build_lattice(LatticeSpec::rect(4, 1)).is_err());
    }

    #[test]
    fn chain_endpoints() {
        let dimer = build_lattice(LatticeSpec::chain(2)).unwrap();
        assert_eq!(dimer.bonds.len(), 1);
        let ring = build_lattice(LatticeSpec::chain(4)).unwrap();
        assert_eq!(ring.bonds.len(), 4);
        for nbr in &ring.neighbors {
            assert_eq!(nbr.len(), 2);
        }
    }

    #[test]
    fn nn_square_l4_pairs() {
        let lat = build_lattice(LatticeSpec::square(4)).unwrap();
        let table = build_interactions(&lat, InteractionKind::NearestNeighbor, 0.0).unwrap();
        assert_eq!(table.pairs.len(), 32);
        assert!(table.pairs.iter().all(|&(_, _, c)| c == 1.0));
    }

    #[test]
    fn dipolar_l12_coefficients() {
        let lat = build_lattice(LatticeSpec::square(12)).unwrap();
        let table = build_interactions(&lat, InteractionKind::Dipolar, 4.0).unwrap();
        // pair at distance 2 along x
        let i = 0usize;
        let j = 2usize;
        let c = table
            .pairs
            .iter()
            .find(|&&(a, b, _)| (a, b) == (i, j))
            .map(|&(_, _, c)| c)
            .unwrap();
        assert!((c - 1.0 / 8.0).abs() < 1e-12);
        // 48 in-range offsets per site (hand count of dx^2 + dy^2 <= 16)
        for row in &table.per_site {
            assert_eq!(row.len(), 48);
        }
        // minimal-image symmetry: coefficient for (0, 10) equals distance 2
        let c_wrap = table
            .per_site[0]
            .iter()
            .find(|&&(k, _)| k == 10)
            .map(|&(_, c)| c)
            .unwrap();
        assert!((c_wrap - 1.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn dipolar_cutoff_rejected_beyond_half_period() {
        let lat = build_lattice(LatticeSpec::square(6)).unwrap();
        assert!(build_interactions(&lat, InteractionKind::Dipolar, 4.0).is_err());
        assert!(build_interactions(&lat, InteractionKind::Dipolar, 3.0).is_ok());
    }

    #[test]
    fn hexagon_table_counts() {
        // One hexagon contributes C(6,2) = 15 pair slots.
        let lat = build_lattice(LatticeSpec::kagome(3)).unwrap();
        let hex = &lat.hexagons[0];
        let mut slots = 0;
        for i in 0..6 {
            for j in (i + 1)..6 {
                assert_ne!(hex[i], hex[j]);
                slots += 1;
            }
        }
        assert_eq!(slots, 15);
        let table = build_interactions(&lat, InteractionKind::Hexagon, 0.0).unwrap();
        // L = 3: no pair is shared between two hexagons
        assert_eq!(table.pairs.len(), 15 * 9);
        assert!(table.pairs.iter().all(|&(_, _, c)| c == 1.0));

        // L = 2: wrap-around makes hexagons share pairs; slots merge
        let lat2 = build_lattice(LatticeSpec::kagome(2)).unwrap();
        let table2 = build_interactions(&lat2, InteractionKind::Hexagon, 0.0).unwrap();
        let total: f64 = table2.pairs.iter().map(|&(_, _, c)| c).sum();
        assert!((total - 60.0).abs() < 1e-12);
        assert_eq!(table2.pairs.len(), 54);
        assert_eq!(table2.pairs.iter().filter(|&&(_, _, c)| c == 2.0).count(), 6);
    }

    #[test]
    fn hexagon_model_rejected_on_square() {
        let lat = build_lattice(LatticeSpec::square(4)).unwrap();
        assert!(build_interactions(&lat, InteractionKind::Hexagon, 0.0).is_err());
        let kag = build_lattice(LatticeSpec::kagome(2)).unwrap();
        assert!(build_interactions(&kag, InteractionKind::Dipolar, 1.0).is_err());
    }

    #[test]
    fn diagonal_energy_examples() {
        let lat = build_lattice(LatticeSpec::square(4)).unwrap();
        let table = build_interactions(&lat, InteractionKind::NearestNeighbor, 0.0).unwrap();
        let cb = checkerboard(4, 4);
        assert_eq!(diagonal_energy(&cb, &table, 1.0, 0.0), 0.0);
        let empty = vec![0u8; 16];
        assert_eq!(diagonal_energy(&empty, &table, 7.0, 0.0), 0.0);

        // one fully occupied hexagon: C(6,2) pairs inside it
        let kag = build_lattice(LatticeSpec::kagome(3)).unwrap();
        let hex_table = build_interactions(&kag, InteractionKind::Hexagon, 0.0).unwrap();
        let mut fock = vec![0u8; kag.n_sites];
        for &s in &kag.hexagons[2] {
            fock[s] = 1;
        }
        let v = 1.3;
        assert!((diagonal_energy(&fock, &hex_table, v, 0.0) - 15.0 * v).abs() < 1e-12);
    }

    #[test]
    fn delta_hop_checkerboard() {
        let lat = build_lattice(LatticeSpec::square(4)).unwrap();
        let table = build_interactions(&lat, InteractionKind::NearestNeighbor, 0.0).unwrap();
        let cb = checkerboard(4, 4);
        // site 0 is occupied, site 1 empty and adjacent
        let v = 2.5;
        let delta = energy_delta_hop(&cb, 0, 1, &table, v).unwrap();
        assert!((delta - 3.0 * v).abs() < 1e-12);

        // single particle: no pair exists anywhere
        let mut single = vec![0u8; 16];
        single[5] = 1;
        assert_eq!(energy_delta_hop(&single, 5, 6, &table, v).unwrap(), 0.0);

        // reverse hop negates
        let mut after = cb.clone();
        after[0] = 0;
        after[1] = 1;
        let back = energy_delta_hop(&after, 1, 0, &table, v).unwrap();
        assert!((back + delta).abs() < 1e-12);

        assert!(energy_delta_hop(&cb, 1, 0, &table, v).is_err());
    }

    #[test]
    fn delta_hop_matches_full_recompute() {
        let mut rng = Pcg64::seed_from_u64(7);
        let cases = [
            (LatticeSpec::square(4), InteractionKind::NearestNeighbor, 0.0),
            (LatticeSpec::square(8), InteractionKind::Dipolar, 4.0),
            (LatticeSpec::kagome(3), InteractionKind::Hexagon, 0.0),
            (LatticeSpec::kagome(2), InteractionKind::NearestNeighbor, 0.0),
        ];
        for (spec, kind, cutoff) in cases {
            let lat = build_lattice(spec).unwrap();
            let table = build_interactions(&lat, kind, cutoff).unwrap();
            let v = 1.7;
            let mu = 0.4;
            let mut checked = 0;
            while checked < 1000 {
                let fock: FockState = (0..lat.n_sites)
                    .map(|_| (rng.random::<f64>() < 0.5) as u8)
                    .collect();
                let i = rng.random_range(0..lat.n_sites);
                let nbrs = &lat.neighbors[i];
                let (j, _) = nbrs[rng.random_range(0..nbrs.len())];
                if fock[i] != 1 || fock[j] != 0 {
                    continue;
                }
                let delta = energy_delta_hop(&fock, i, j, &table, v).unwrap();
                let before = diagonal_energy(&fock, &table, v, mu);
                let mut after = fock.clone();
                after[i] = 0;
                after[j] = 1;
                let full = diagonal_energy(&after, &table, v, mu) - before;
                let scale = full.abs().max(1.0);
                assert!(
                    (delta - full).abs() / scale < 1e-12,
                    "local delta {delta} vs full {full}"
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn dipolar_table_symmetric() {
        let lat = build_lattice(LatticeSpec::square(8)).unwrap();
        let table = build_interactions(&lat, InteractionKind::Dipolar, 4.0).unwrap();
        for &(a, b, c) in &table.pairs {
            assert!(a < b);
            let back = table.per_site[b]
                .iter()
                .find(|&&(k, _)| k == a)
                .map(|&(_, cc)| cc)
                .unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn model_spec_validation() {
        assert!(ModelSpec::new(1.0, 0.0, 0.0, (1, 2), 1.0).is_ok());
        assert!(ModelSpec::new(-1.0, 0.0, 0.0, (1, 2), 1.0).is_err());
        assert!(ModelSpec::new(1.0, 0.0, 0.0, (2, 2), 1.0).is_err());
        assert!(ModelSpec::new(1.0, 0.0, 0.0, (1, 2), 0.0).is_err());
        let m = ModelSpec::new(1.0, 0.0, 0.0, (1, 3), 1.0).unwrap();
        assert_eq!(m.target_particles(12).unwrap(), 4);
        assert!(m.target_particles(16).is_err());
    }

    #[test]
    fn lattice_json_roundtrip() {
        let lat = build_lattice(LatticeSpec::kagome(2)).unwrap();
        let json = lat.to_json();
        let back: Lattice = serde_json::from_str(&json).unwrap();
        assert_eq!(back.bonds, lat.bonds);
        assert_eq!(back.hexagons, lat.hexagons);
    }
}
