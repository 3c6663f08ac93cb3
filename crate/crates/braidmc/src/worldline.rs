//! Continuous-imaginary-time worldline configurations.
//!
//! A configuration stores, per site, a time-ordered list of occupancy-change
//! events on the unit time circle (internal times live in [0, 1) and are
//! scaled by beta only when weights are evaluated). Closed configurations are
//! periodic in time; an open worm adds a head (worldline terminates) and a
//! tail (worldline begins).

use crate::lattice::{diagonal_energy, energy_delta_hop, FockState, Lattice, ModelSpec};
use crate::rational::KahanSum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldlineError {
    #[error("operation requires a closed configuration (worm present)")]
    WormPresent,
    #[error("hopping amplitude must be positive, got {0}")]
    NonPositiveHopping(f64),
    #[error("invalid kink: {0}")]
    InvalidKink(String),
    #[error("inconsistent configuration: {0}")]
    Inconsistent(String),
}

/// Wrap to [0, 1).
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Cyclic distance from `a` up to `b` on the unit circle, in (0, 1].
#[inline]
pub fn cyc_dist(a: f64, b: f64) -> f64 {
    let d = frac(b - a);
    if d == 0.0 {
        1.0
    } else {
        d
    }
}

/// A hop event: the particle moves `from -> to` at `time` (physical units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    pub time: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    /// Particle leaves this site (occupancy 1 -> 0).
    KinkOut { to: usize },
    /// Particle arrives at this site (occupancy 0 -> 1).
    KinkIn { from: usize },
    /// Worm head: the open worldline terminates here (1 -> 0).
    Head,
    /// Worm tail: the open worldline begins here (0 -> 1).
    Tail,
}

impl EventKind {
    #[inline]
    pub fn n_after(&self) -> u8 {
        match self {
            EventKind::KinkOut { .. } | EventKind::Head => 0,
            EventKind::KinkIn { .. } | EventKind::Tail => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Internal time in [0, 1).
    pub u: f64,
    pub kind: EventKind,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SiteTimeline {
    /// Events sorted by time, strictly increasing.
    pub events: Vec<Event>,
    /// Occupancy used when `events` is empty.
    pub n_flat: u8,
}

impl SiteTimeline {
    /// First index with event time strictly greater than `u`.
    #[inline]
    fn idx_after(&self, u: f64) -> usize {
        self.events.partition_point(|e| e.u <= u)
    }

    /// Occupancy at (and immediately after) internal time `u`.
    #[inline]
    pub fn occ(&self, u: f64) -> u8 {
        if self.events.is_empty() {
            return self.n_flat;
        }
        let i = self.idx_after(u);
        if i == 0 {
            // before the first event: wraps from the last one
            self.events[self.events.len() - 1].kind.n_after()
        } else {
            self.events[i - 1].kind.n_after()
        }
    }

    /// Next event strictly after `u`, cyclic. None when the site has no
    /// events.
    #[inline]
    pub fn next_event(&self, u: f64) -> Option<&Event> {
        if self.events.is_empty() {
            return None;
        }
        let i = self.idx_after(u);
        Some(if i == self.events.len() {
            &self.events[0]
        } else {
            &self.events[i]
        })
    }

    /// Previous event strictly before `u`, cyclic.
    #[inline]
    pub fn prev_event(&self, u: f64) -> Option<&Event> {
        if self.events.is_empty() {
            return None;
        }
        let i = self.events.partition_point(|e| e.u < u);
        Some(if i == 0 {
            &self.events[self.events.len() - 1]
        } else {
            &self.events[i - 1]
        })
    }

    /// Measure of occupied time within the cyclic window (start, start+len).
    pub fn occupied_time(&self, start: f64, len: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&len));
        if self.events.is_empty() {
            return self.n_flat as f64 * len;
        }
        let mut occupied = 0.0;
        let mut cursor = 0.0; // distance travelled from `start`
        let mut occ = self.occ(start);
        let mut i = self.idx_after(start);
        loop {
            let (eu, ekind) = if i == self.events.len() {
                (self.events[0].u, self.events[0].kind)
            } else {
                (self.events[i].u, self.events[i].kind)
            };
            let d = cyc_dist(start, eu);
            // `d` can wrap the full circle when the window starts exactly on
            // an event; events past the window end the walk.
            if d >= len || d <= cursor {
                if occ == 1 {
                    occupied += len - cursor;
                }
                break;
            }
            if occ == 1 {
                occupied += d - cursor;
            }
            cursor = d;
            occ = ekind.n_after();
            i = if i == self.events.len() { 1 } else { i + 1 };
            if i > self.events.len() {
                i = 0;
            }
        }
        occupied
    }

    fn insert(&mut self, ev: Event) {
        let i = self.events.partition_point(|e| e.u < ev.u);
        self.events.insert(i, ev);
    }

    fn remove_at(&mut self, u: f64) -> Event {
        let i = self.events.partition_point(|e| e.u < u);
        debug_assert!(i < self.events.len() && self.events[i].u == u);
        self.events.remove(i)
    }
}

/// Open worldline end: site plus internal time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WormEnd {
    pub site: usize,
    pub u: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Worm {
    pub head: WormEnd,
    pub tail: WormEnd,
}

/// Counts (n_1, ..., n_N) of permutation cycles by winding length.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CycleVector(pub Vec<u32>);

impl CycleVector {
    pub fn n_particles(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &n)| (i + 1) * n as usize)
            .sum()
    }

    /// All particles in 1-beta cycles.
    pub fn is_trivial(&self) -> bool {
        self.0.iter().skip(1).all(|&n| n == 0)
    }

    pub fn longest_cycle(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &n)| n > 0)
            .map(|(i, _)| i + 1)
            .unwrap_or(0)
    }

    /// Dash-separated counts, e.g. "3-1-0".
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }

    pub fn parse(label: &str) -> Option<Self> {
        let counts: Option<Vec<u32>> = label.split('-').map(|s| s.parse().ok()).collect();
        counts.map(CycleVector)
    }
}

/// A full worldline configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Configuration {
    beta: f64,
    sites: Vec<SiteTimeline>,
    n_kinks: usize,
    worm: Option<Worm>,
    /// Incrementally tracked log weight (kink factors + energy integral);
    /// maintained by the sampler, checked against `log_weight`.
    pub(crate) tracked_log_weight: KahanSum,
}

impl Configuration {
    /// Kink-free configuration at a given Fock state.
    pub fn new(n_sites: usize, beta: f64, fock0: &[u8]) -> Self {
        assert_eq!(fock0.len(), n_sites);
        Configuration {
            beta,
            sites: fock0
                .iter()
                .map(|&n| SiteTimeline {
                    events: Vec::new(),
                    n_flat: n,
                })
                .collect(),
            n_kinks: 0,
            worm: None,
            tracked_log_weight: KahanSum::new(),
        }
    }

    /// Closed configuration from a kink list (internal times). The hops must
    /// be legal in time order and return to `fock0` at the wrap.
    pub fn with_kinks(
        n_sites: usize,
        beta: f64,
        fock0: &[u8],
        kinks: &[(f64, usize, usize)],
    ) -> Result<Self, WorldlineError> {
        let mut config = Configuration::new(n_sites, beta, fock0);
        let mut ordered: Vec<(f64, usize, usize)> = kinks.to_vec();
        ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in ordered.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(WorldlineError::InvalidKink(format!(
                    "two kinks share time {}",
                    w[0].0
                )));
            }
        }
        let mut fock = fock0.to_vec();
        for &(u, from, to) in &ordered {
            if !(0.0..1.0).contains(&u) {
                return Err(WorldlineError::InvalidKink(format!(
                    "time {u} outside [0, 1)"
                )));
            }
            if fock[from] != 1 || fock[to] != 0 {
                return Err(WorldlineError::InvalidKink(format!(
                    "hop {from}->{to} at u={u} violates hard-core"
                )));
            }
            fock[from] = 0;
            fock[to] = 1;
            config.sites[from].insert(Event {
                u,
                kind: EventKind::KinkOut { to },
            });
            config.sites[to].insert(Event {
                u,
                kind: EventKind::KinkIn { from },
            });
            config.n_kinks += 1;
        }
        if fock != fock0 {
            return Err(WorldlineError::InvalidKink(
                "kink sequence does not return to the initial state".into(),
            ));
        }
        Ok(config)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_kinks(&self) -> usize {
        self.n_kinks
    }

    pub fn worm(&self) -> Option<&Worm> {
        self.worm.as_ref()
    }

    pub fn site(&self, s: usize) -> &SiteTimeline {
        &self.sites[s]
    }

    /// Occupancy at physical time tau (0 <= tau < beta); events at tau take
    /// effect at tau.
    pub fn occupation(&self, site: usize, tau: f64) -> u8 {
        self.sites[site].occ(frac(tau / self.beta))
    }

    #[inline]
    pub(crate) fn occ_u(&self, site: usize, u: f64) -> u8 {
        self.sites[site].occ(u)
    }

    /// Fock state at physical time tau. Ill-defined while a worm is open.
    pub fn fock_state(&self, tau: f64) -> Result<FockState, WorldlineError> {
        if self.worm.is_some() {
            return Err(WorldlineError::WormPresent);
        }
        let u = frac(tau / self.beta);
        Ok(self.sites.iter().map(|s| s.occ(u)).collect())
    }

    pub(crate) fn fock_u0(&self) -> FockState {
        self.sites.iter().map(|s| s.occ(0.0)).collect()
    }

    /// Particle count at time zero.
    pub fn particle_count(&self) -> usize {
        self.sites.iter().map(|s| s.occ(0.0) as usize).sum()
    }

    /// All kinks in time order (physical times).
    pub fn kinks(&self) -> Vec<Kink> {
        let mut out = Vec::with_capacity(self.n_kinks);
        for (s, tl) in self.sites.iter().enumerate() {
            for ev in &tl.events {
                if let EventKind::KinkOut { to } = ev.kind {
                    out.push(Kink {
                        time: ev.u * self.beta,
                        from: s,
                        to,
                    });
                }
            }
        }
        out.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        out
    }

    pub(crate) fn insert_event(&mut self, site: usize, ev: Event) {
        if matches!(ev.kind, EventKind::KinkOut { .. }) {
            self.n_kinks += 1;
        }
        self.sites[site].insert(ev);
    }

    pub(crate) fn remove_event(&mut self, site: usize, u: f64) -> Event {
        let ev = self.sites[site].remove_at(u);
        if matches!(ev.kind, EventKind::KinkOut { .. }) {
            self.n_kinks -= 1;
        }
        ev
    }

    pub(crate) fn set_worm(&mut self, worm: Option<Worm>) {
        self.worm = worm;
    }

    /// Occupancy for a site whose event list has just been emptied.
    pub(crate) fn set_flat(&mut self, site: usize, n: u8) {
        debug_assert!(self.sites[site].events.is_empty());
        self.sites[site].n_flat = n;
    }

    pub(crate) fn raw_sites(&self) -> &[SiteTimeline] {
        &self.sites
    }

    /// Apply a site relabeling (a lattice symmetry): timeline s moves to
    /// map[s] and kink partners are renamed. The weight is unchanged when
    /// `map` is an automorphism of the hopping and interaction graphs.
    pub(crate) fn relabel_sites(&mut self, map: &[usize]) {
        debug_assert_eq!(map.len(), self.sites.len());
        let old = std::mem::take(&mut self.sites);
        let mut sites: Vec<SiteTimeline> = vec![SiteTimeline::default(); map.len()];
        for (s, mut tl) in old.into_iter().enumerate() {
            for ev in &mut tl.events {
                ev.kind = match ev.kind {
                    EventKind::KinkOut { to } => EventKind::KinkOut { to: map[to] },
                    EventKind::KinkIn { from } => EventKind::KinkIn { from: map[from] },
                    other => other,
                };
            }
            sites[map[s]] = tl;
        }
        self.sites = sites;
        if let Some(w) = &mut self.worm {
            w.head.site = map[w.head.site];
            w.tail.site = map[w.tail.site];
        }
    }

    pub(crate) fn tracked_value(&self) -> f64 {
        self.tracked_log_weight.value()
    }

    /// Rebuild a configuration from serialized parts; validates structure.
    pub(crate) fn from_parts(
        beta: f64,
        sites: Vec<SiteTimeline>,
        worm: Option<Worm>,
        tracked: f64,
    ) -> Result<Self, WorldlineError> {
        let n_kinks = sites
            .iter()
            .flat_map(|tl| tl.events.iter())
            .filter(|e| matches!(e.kind, EventKind::KinkOut { .. }))
            .count();
        let mut tracked_log_weight = KahanSum::new();
        tracked_log_weight.add(tracked);
        let config = Configuration {
            beta,
            sites,
            n_kinks,
            worm,
            tracked_log_weight,
        };
        config.validate()?;
        Ok(config)
    }

    /// Rebuild the configuration with the time origin rotated by `delta_u`
    /// (internal units): times map to u - delta_u mod 1.
    pub fn shift_time_origin(&self, delta_u: f64) -> Result<Configuration, WorldlineError> {
        if self.worm.is_some() {
            return Err(WorldlineError::WormPresent);
        }
        let fock0: FockState = self.sites.iter().map(|s| s.occ(frac(delta_u))).collect();
        let kinks: Vec<(f64, usize, usize)> = self
            .kinks()
            .iter()
            .map(|k| (frac(k.time / self.beta - delta_u), k.from, k.to))
            .collect();
        Configuration::with_kinks(self.sites.len(), self.beta, &fock0, &kinks)
    }

    /// The permutation of occupied tau=0 sites induced by gluing worldlines
    /// at tau = beta to tau = 0, decomposed into cycle-length counts.
    pub fn permutation_cycles(&self) -> Result<CycleVector, WorldlineError> {
        if self.worm.is_some() {
            return Err(WorldlineError::WormPresent);
        }
        let starts: Vec<usize> = (0..self.sites.len())
            .filter(|&s| self.sites[s].occ(0.0) == 1)
            .collect();
        let n = starts.len();
        let mut perm: Vec<usize> = Vec::with_capacity(n);
        for &s0 in &starts {
            let mut s = s0;
            let mut u = 0.0f64;
            loop {
                let tl = &self.sites[s];
                let i = tl.idx_after(u);
                if i == tl.events.len() {
                    break; // stays on s until the wrap
                }
                match tl.events[i].kind {
                    EventKind::KinkOut { to } => {
                        u = tl.events[i].u;
                        s = to;
                    }
                    ref k => {
                        return Err(WorldlineError::Inconsistent(format!(
                            "occupied worldline on site {s} meets {k:?} at u={}",
                            tl.events[i].u
                        )))
                    }
                }
            }
            perm.push(s);
        }
        // decompose into cycles over the start-site set
        let index_of = |site: usize| starts.binary_search(&site).ok();
        let mut counts = vec![0u32; n.max(1)];
        let mut visited = vec![false; n];
        for i in 0..n {
            if visited[i] {
                continue;
            }
            let mut len = 0usize;
            let mut j = i;
            while !visited[j] {
                visited[j] = true;
                len += 1;
                j = index_of(perm[j]).ok_or_else(|| {
                    WorldlineError::Inconsistent(format!(
                        "worldline ends on site {} not occupied at tau=0",
                        perm[j]
                    ))
                })?;
            }
            counts[len - 1] += 1;
        }
        if n == 0 {
            counts.clear();
        }
        let q = CycleVector(counts);
        debug_assert_eq!(q.n_particles(), n);
        Ok(q)
    }

    /// Structural validation: strict event ordering, cyclic 0/1 alternation
    /// per site, kink pairing across sites, worm bookkeeping, and global
    /// uniqueness of event times. O(total events) apart from the sort.
    pub fn validate(&self) -> Result<(), WorldlineError> {
        let mut all_times: Vec<f64> = Vec::new();
        let mut worm_ends = 0usize;
        let mut kink_outs: Vec<(u64, usize, usize)> = Vec::new();
        let mut kink_ins: Vec<(u64, usize, usize)> = Vec::new();
        for (s, tl) in self.sites.iter().enumerate() {
            for w in tl.events.windows(2) {
                if w[0].u >= w[1].u {
                    return Err(WorldlineError::Inconsistent(format!(
                        "site {s}: events out of order at u={}",
                        w[1].u
                    )));
                }
                if w[0].kind.n_after() == w[1].kind.n_after() {
                    return Err(WorldlineError::Inconsistent(format!(
                        "site {s}: occupancy does not alternate at u={}",
                        w[1].u
                    )));
                }
            }
            if let (Some(first), Some(last)) = (tl.events.first(), tl.events.last()) {
                if tl.events.len() == 1 || first.kind.n_after() == last.kind.n_after() {
                    return Err(WorldlineError::Inconsistent(format!(
                        "site {s}: occupancy not periodic around the time wrap"
                    )));
                }
            }
            for ev in &tl.events {
                if !(0.0..1.0).contains(&ev.u) {
                    return Err(WorldlineError::Inconsistent(format!(
                        "site {s}: event time {} outside [0,1)",
                        ev.u
                    )));
                }
                // a kink holds one time shared by its two site events; count
                // it once (from the out half) for global time uniqueness
                match ev.kind {
                    EventKind::KinkOut { to } => {
                        kink_outs.push((ev.u.to_bits(), s, to));
                        all_times.push(ev.u);
                    }
                    EventKind::KinkIn { from } => kink_ins.push((ev.u.to_bits(), from, s)),
                    EventKind::Head | EventKind::Tail => {
                        worm_ends += 1;
                        all_times.push(ev.u);
                    }
                }
            }
        }
        kink_outs.sort_unstable();
        kink_ins.sort_unstable();
        if kink_outs != kink_ins {
            return Err(WorldlineError::Inconsistent(
                "kink out/in events are not paired".into(),
            ));
        }
        if kink_outs.len() != self.n_kinks {
            return Err(WorldlineError::Inconsistent(format!(
                "kink count {} does not match events {}",
                self.n_kinks,
                kink_outs.len()
            )));
        }
        match (&self.worm, worm_ends) {
            (None, 0) => {}
            (Some(w), 2) => {
                let head_ok = self.sites[w.head.site]
                    .events
                    .iter()
                    .any(|e| e.u == w.head.u && matches!(e.kind, EventKind::Head));
                let tail_ok = self.sites[w.tail.site]
                    .events
                    .iter()
                    .any(|e| e.u == w.tail.u && matches!(e.kind, EventKind::Tail));
                if !head_ok || !tail_ok {
                    return Err(WorldlineError::Inconsistent(
                        "worm record does not match events".into(),
                    ));
                }
            }
            (w, n) => {
                return Err(WorldlineError::Inconsistent(format!(
                    "worm record {w:?} inconsistent with {n} open ends"
                )))
            }
        }
        all_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in all_times.windows(2) {
            if w[0] == w[1] {
                return Err(WorldlineError::Inconsistent(format!(
                    "two events share time u={}",
                    w[0]
                )));
            }
        }
        Ok(())
    }
}

/// log of the configuration weight density: n log(t) + sum over kinks of
/// log(slot multiplicity) minus the diagonal-energy integral. Worm-free
/// configurations only.
pub fn log_weight(
    config: &Configuration,
    lattice: &Lattice,
    model: &ModelSpec,
    table: &crate::lattice::InteractionTable,
) -> Result<f64, WorldlineError> {
    if config.worm.is_some() {
        return Err(WorldlineError::WormPresent);
    }
    if model.t <= 0.0 {
        return Err(WorldlineError::NonPositiveHopping(model.t));
    }
    let kinks = config.kinks();
    let mut fock = config.fock_u0();
    let mut energy = diagonal_energy(&fock, table, model.v, model.mu);
    let mut sum = KahanSum::new();
    let mut u_prev = 0.0f64;
    let mut kink_factor = 0.0f64;
    for k in &kinks {
        let u = k.time / config.beta;
        sum.add(-energy * (u - u_prev) * config.beta);
        u_prev = u;
        let delta =
            energy_delta_hop(&fock, k.from, k.to, table, model.v).map_err(|e| {
                WorldlineError::Inconsistent(format!("illegal kink in weight evaluation: {e}"))
            })?;
        energy += delta;
        fock[k.from] = 0;
        fock[k.to] = 1;
        let mult = lattice.neighbors[k.from]
            .iter()
            .find(|&&(site, _)| site == k.to)
            .map(|&(_, m)| m)
            .ok_or_else(|| {
                WorldlineError::InvalidKink(format!("{} -> {} is not a hop bond", k.from, k.to))
            })?;
        kink_factor += (model.t * mult as f64).ln();
    }
    sum.add(-energy * (1.0 - u_prev) * config.beta);
    Ok(kink_factor + sum.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_interactions, build_lattice, InteractionKind, LatticeSpec};
    use proptest::prelude::*;

    fn square4() -> (Lattice, crate::lattice::InteractionTable, ModelSpec) {
        let lat = build_lattice(LatticeSpec::square(4)).unwrap();
        let table = build_interactions(&lat, InteractionKind::NearestNeighbor, 0.0).unwrap();
        let model = ModelSpec::new(1.0, 3.0, 0.7, (1, 2), 2.0).unwrap();
        (lat, table, model)
    }

    #[test]
    fn kink_free_occupation() {
        let fock = vec![1, 0, 1, 0];
        let config = Configuration::new(4, 2.0, &fock);
        for tau in [0.0, 0.3, 1.9] {
            assert_eq!(config.occupation(0, tau), 1);
            assert_eq!(config.occupation(1, tau), 0);
        }
        assert_eq!(config.fock_state(1.1).unwrap(), fock);
        assert_eq!(
            config.permutation_cycles().unwrap(),
            CycleVector(vec![2, 0])
        );
    }

    #[test]
    fn excursion_occupation_boundaries() {
        // particle 0 visits site 1 during (0.2, 0.6) on a 2-site dimer
        let config =
            Configuration::with_kinks(2, 1.0, &[1, 0], &[(0.2, 0, 1), (0.6, 1, 0)]).unwrap();
        config.validate().unwrap();
        assert_eq!(config.occupation(1, 0.4), 1);
        assert_eq!(config.occupation(0, 0.4), 0);
        // just before a kink: pre-kink value; at the kink: post value
        assert_eq!(config.occupation(1, 0.2 - 1e-12), 0);
        assert_eq!(config.occupation(1, 0.2), 1);
        assert_eq!(config.occupation(0, 0.6), 1);
        assert_eq!(config.particle_count(), 1);
    }

    #[test]
    fn with_kinks_rejects_illegal_sequences() {
        // does not return to fock0
        assert!(Configuration::with_kinks(3, 1.0, &[1, 0, 0], &[(0.5, 0, 1)]).is_err());
        // hard-core violation
        assert!(
            Configuration::with_kinks(3, 1.0, &[1, 1, 0], &[(0.2, 0, 1), (0.6, 1, 0)]).is_err()
        );
        // duplicate times
        assert!(
            Configuration::with_kinks(2, 1.0, &[1, 0], &[(0.5, 0, 1), (0.5, 1, 0)]).is_err()
        );
    }

    #[test]
    fn log_weight_kink_free() {
        let (lat, table, model) = square4();
        let fock: Vec<u8> = (0..16).map(|s| ((s % 4 + s / 4) % 2 == 0) as u8).collect();
        let config = Configuration::new(16, model.beta, &fock);
        let expected = -model.beta * diagonal_energy(&fock, &table, model.v, model.mu);
        let lw = log_weight(&config, &lat, &model, &table).unwrap();
        assert!((lw - expected).abs() < 1e-12);
    }

    #[test]
    fn log_weight_excursion_factorizes() {
        let (lat, table, model) = square4();
        let fock: Vec<u8> = (0..16).map(|s| ((s % 4 + s / 4) % 2 == 0) as u8).collect();
        let base = Configuration::new(16, model.beta, &fock);
        let (ua, ub) = (0.3, 0.45);
        let hop = (ua, 0usize, 1usize);
        let back = (ub, 1usize, 0usize);
        let excited = Configuration::with_kinks(16, model.beta, &fock, &[hop, back]).unwrap();
        excited.validate().unwrap();

        let mut mid = fock.clone();
        mid[0] = 0;
        mid[1] = 1;
        let delta_e = diagonal_energy(&mid, &table, model.v, model.mu)
            - diagonal_energy(&fock, &table, model.v, model.mu);
        let expected = log_weight(&base, &lat, &model, &table).unwrap() + 2.0 * model.t.ln()
            - delta_e * (ub - ua) * model.beta;
        let got = log_weight(&excited, &lat, &model, &table).unwrap();
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn log_weight_rejects_bad_inputs() {
        let (lat, table, _) = square4();
        let fock = vec![0u8; 16];
        let config = Configuration::new(16, 2.0, &fock);
        let bad_t = ModelSpec::new(0.0, 1.0, 0.0, (1, 2), 2.0).unwrap();
        assert!(log_weight(&config, &lat, &bad_t, &table).is_err());
    }

    /// Three particles on four sites: a single 3-cycle.
    #[test]
    fn three_particle_full_cycle() {
        // occupied {0,1,2}; the hole walks around once
        let kinks = [
            (0.2, 2usize, 3usize),
            (0.4, 1, 2),
            (0.6, 0, 1),
            (0.8, 3, 0),
        ];
        let config = Configuration::with_kinks(4, 1.0, &[1, 1, 1, 0], &kinks).unwrap();
        config.validate().unwrap();
        assert_eq!(
            config.permutation_cycles().unwrap(),
            CycleVector(vec![0, 0, 1])
        );
    }

    /// Three particles, one pair exchange: cycle vector (1, 1, 0).
    #[test]
    fn three_particle_pair_exchange() {
        // particles at 0,1,2; 1 and 2 swap through the hole at 3
        let kinks = [(0.2, 2usize, 3usize), (0.5, 1, 2), (0.7, 3, 1)];
        let config = Configuration::with_kinks(4, 1.0, &[1, 1, 1, 0], &kinks).unwrap();
        config.validate().unwrap();
        assert_eq!(
            config.permutation_cycles().unwrap(),
            CycleVector(vec![1, 1, 0])
        );
    }

    #[test]
    fn occupied_time_measures_windows() {
        let config =
            Configuration::with_kinks(2, 1.0, &[1, 0], &[(0.2, 0, 1), (0.6, 1, 0)]).unwrap();
        let tl = config.site(1); // occupied on (0.2, 0.6)
        assert!((tl.occupied_time(0.0, 1.0) - 0.4).abs() < 1e-12);
        assert!((tl.occupied_time(0.3, 0.1) - 0.1).abs() < 1e-12);
        assert!((tl.occupied_time(0.5, 0.4) - 0.1).abs() < 1e-12);
        // window wrapping the seam
        assert!((tl.occupied_time(0.9, 0.4) - 0.1).abs() < 1e-12);
        let flat = config.site(0);
        assert!((flat.occupied_time(0.9, 0.4) - 0.3).abs() < 1e-12);
    }

    /// Three particles on a 4-site ring with a full 3-cycle; all hops are
    /// ring bonds.
    fn nontrivial_config() -> Configuration {
        let kinks = [
            (0.15, 2usize, 3usize),
            (0.35, 1, 2),
            (0.55, 0, 1),
            (0.7, 3, 0),
        ];
        Configuration::with_kinks(4, 2.5, &[1, 1, 1, 0], &kinks).unwrap()
    }

    proptest! {
        #[test]
        fn cycles_invariant_under_time_rotation(delta in 0.0f64..1.0) {
            let config = nontrivial_config();
            assert_eq!(config.permutation_cycles().unwrap(), CycleVector(vec![0, 0, 1]));
            let shifted = config.shift_time_origin(delta).unwrap();
            shifted.validate().unwrap();
            prop_assert_eq!(
                shifted.permutation_cycles().unwrap(),
                config.permutation_cycles().unwrap()
            );
        }

        #[test]
        fn log_weight_invariant_under_time_rotation(delta in 0.0f64..1.0) {
            let lat = build_lattice(LatticeSpec::chain(4)).unwrap();
            let table = build_interactions(&lat, InteractionKind::NearestNeighbor, 0.0).unwrap();
            let model = ModelSpec::new(0.8, 1.5, 0.3, (1, 2), 2.5).unwrap();
            let config = nontrivial_config();
            let shifted = config.shift_time_origin(delta).unwrap();
            let lw0 = log_weight(&config, &lat, &model, &table).unwrap();
            let lw1 = log_weight(&shifted, &lat, &model, &table).unwrap();
            prop_assert!((lw0 - lw1).abs() < 1e-9);
        }
    }

    #[test]
    fn relabeling_preserves_weight_and_cycles() {
        let lat = build_lattice(LatticeSpec::chain(4)).unwrap();
        let table = build_interactions(&lat, InteractionKind::NearestNeighbor, 0.0).unwrap();
        let model = ModelSpec::new(0.8, 1.5, 0.3, (1, 2), 2.5).unwrap();
        for map in lat.translation_maps() {
            let mut config = nontrivial_config();
            let lw0 = log_weight(&config, &lat, &model, &table).unwrap();
            let q0 = config.permutation_cycles().unwrap();
            config.relabel_sites(&map);
            config.validate().unwrap();
            assert_eq!(config.permutation_cycles().unwrap(), q0);
            let lw1 = log_weight(&config, &lat, &model, &table).unwrap();
            assert!((lw0 - lw1).abs() < 1e-12);
        }
    }

    #[test]
    fn cycle_vector_helpers() {
        let q = CycleVector(vec![1, 1, 0]);
        assert_eq!(q.n_particles(), 3);
        assert!(!q.is_trivial());
        assert_eq!(q.longest_cycle(), 2);
        assert_eq!(q.label(), "1-1-0");
        assert_eq!(CycleVector::parse("1-1-0").unwrap(), q);
        assert!(CycleVector(vec![3, 0, 0]).is_trivial());
    }
}
