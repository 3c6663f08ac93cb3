//! Elementary worm updates: open/close a worm pair, shift the head in time,
//! insert a kink at the head, delete the kink behind the head.
//!
//! Every move computes its full Metropolis-Hastings log ratio (weight change
//! plus proposal densities both ways, including move-kind probabilities), so
//! detailed balance can be audited pair by pair: applying a move and then
//! evaluating its reverse must give log ratios summing to zero.

use crate::lattice::{InteractionTable, Lattice, ModelSpec};
use crate::worldline::{cyc_dist, frac, Configuration, Event, EventKind, Worm, WormEnd};
use rand::Rng;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

pub const KIND_NAMES: [&str; 5] = ["open", "close", "shift", "insert", "delete"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    Open = 0,
    Close = 1,
    Shift = 2,
    Insert = 3,
    Delete = 4,
}

/// Move-kind proposal probabilities; uniform keeps the kind factors out of
/// the acceptance ratios but they are carried explicitly anyway.
const KIND_PROBS: [f64; 5] = [0.2, 0.2, 0.2, 0.2, 0.2];

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    pub proposed: [u64; 5],
    pub accepted: [u64; 5],
}

impl UpdateStats {
    pub fn acceptance(&self, kind: usize) -> f64 {
        if self.proposed[kind] == 0 {
            0.0
        } else {
            self.accepted[kind] as f64 / self.proposed[kind] as f64
        }
    }

    pub fn merge(&mut self, other: &UpdateStats) {
        for k in 0..5 {
            self.proposed[k] += other.proposed[k];
            self.accepted[k] += other.accepted[k];
        }
    }
}

/// A fully specified elementary move; random sampling picks one, the audit
/// replays them deterministically.
///
/// `Insert` grows the head's worldline upward into an empty neighbor, or
/// cuts downward into an occupied one (the variant follows from the
/// neighbor's occupancy). `Delete` undoes the kink just below the head
/// (`above: false`) or passes the head through the oncoming arrival kink
/// just above it (`above: true`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Choice {
    Open { site: usize, u_start: f64, delta: f64 },
    Close { fill: bool },
    Shift { u_new: f64 },
    Insert { nbr_idx: usize, u_head_new: f64 },
    Delete { above: bool },
}

impl Choice {
    pub fn kind(&self) -> MoveKind {
        match self {
            Choice::Open { .. } => MoveKind::Open,
            Choice::Close { .. } => MoveKind::Close,
            Choice::Shift { .. } => MoveKind::Shift,
            Choice::Insert { .. } => MoveKind::Insert,
            Choice::Delete { .. } => MoveKind::Delete,
        }
    }
}

/// Evaluated proposal: the Metropolis-Hastings log ratio and the physical
/// log-weight change it would apply.
#[derive(Clone, Copy, Debug)]
pub struct Evaluated {
    pub choice: Choice,
    pub log_ratio: f64,
    pub log_dw: f64,
}

/// Static sampling context shared by all updates of one chain.
pub struct SamplerContext<'a> {
    pub lattice: &'a Lattice,
    pub table: &'a InteractionTable,
    pub model: &'a ModelSpec,
    pub worm_fugacity: f64,
    /// Rate of the truncated-exponential worm-extent proposal.
    pub lambda_open: f64,
    /// Half width of the head time-shift proposal.
    pub w_shift: f64,
    /// Cap on the kink-insertion window.
    pub w_kink: f64,
}

impl<'a> SamplerContext<'a> {
    pub fn new(
        lattice: &'a Lattice,
        table: &'a InteractionTable,
        model: &'a ModelSpec,
        worm_fugacity: f64,
    ) -> Self {
        // scale of the diagonal cost of toggling one site's occupancy; sets
        // how far worm ends are proposed in time
        let energy_scale = model.mu.abs() + model.v.abs() * table.max_row_sum() * 0.5;
        let lambda_open = (model.beta * energy_scale).clamp(1.0, 1e6);
        let window = (8.0 / lambda_open).min(0.45);
        SamplerContext {
            lattice,
            table,
            model,
            worm_fugacity,
            lambda_open,
            w_shift: window,
            w_kink: window,
        }
    }

    /// Energy-integral gain (internal time units) from occupying `site` over
    /// the cyclic window (start, start+len): V sum_k c_k T_k - mu len.
    fn toggle_cost(&self, cfg: &Configuration, site: usize, start: f64, len: f64) -> f64 {
        let mut pair = 0.0;
        for &(k, c) in &self.table.per_site[site] {
            pair += c * cfg.site(k).occupied_time(start, len);
        }
        self.model.v * pair - self.model.mu * len
    }

    fn log_trunc_exp_density(&self, delta: f64) -> f64 {
        let l = self.lambda_open;
        l.ln() - l * delta - (-(-l).exp_m1()).ln()
    }

    fn sample_trunc_exp(&self, rng: &mut Pcg64) -> f64 {
        let u: f64 = rng.random();
        -(1.0 - u * (-(-self.lambda_open).exp_m1())).ln() / self.lambda_open
    }

    fn has_event_at(&self, cfg: &Configuration, site: usize, u: f64) -> bool {
        cfg.site(site)
            .events
            .iter()
            .any(|e| e.u == u)
    }

    /// Draw a random fully specified move for the current sector.
    pub fn draw_choice(&self, cfg: &Configuration, rng: &mut Pcg64) -> Choice {
        let r: f64 = rng.random();
        let mut kind = 4;
        let mut acc = 0.0;
        for (k, p) in KIND_PROBS.iter().enumerate() {
            acc += p;
            if r < acc {
                kind = k;
                break;
            }
        }
        match kind {
            0 => Choice::Open {
                site: rng.random_range(0..cfg.n_sites()),
                u_start: rng.random(),
                delta: self.sample_trunc_exp(rng),
            },
            1 => Choice::Close { fill: rng.random() },
            2 => {
                let u_h = cfg.worm().map(|w| w.head.u).unwrap_or(0.0);
                let d = (rng.random::<f64>() * 2.0 - 1.0) * self.w_shift;
                Choice::Shift {
                    u_new: frac(u_h + d),
                }
            }
            3 => {
                let (site, u_h) = cfg
                    .worm()
                    .map(|w| (w.head.site, w.head.u))
                    .unwrap_or((0, 0.0));
                let z = self.lattice.neighbors[site].len();
                let nbr_idx = rng.random_range(0..z);
                // the admissible window is evaluated later; draw the raw
                // fraction here so replay stays deterministic
                let fraction: f64 = rng.random();
                let (to, _) = self.lattice.neighbors[site][nbr_idx];
                let u_head_new = if cfg.occ_u(to, u_h) == 0 {
                    // grow upward into the empty neighbor
                    frac(u_h + fraction * self.window_up(cfg, to, u_h))
                } else {
                    // cut downward into the occupied neighbor
                    frac(u_h - fraction * self.window_down(cfg, to, u_h))
                };
                Choice::Insert { nbr_idx, u_head_new }
            }
            _ => Choice::Delete { above: rng.random() },
        }
    }

    /// Free stretch above `u_h` on `site`, capped.
    fn window_up(&self, cfg: &Configuration, site: usize, u_h: f64) -> f64 {
        let raw = match cfg.site(site).next_event(u_h) {
            None => 1.0,
            Some(e) => cyc_dist(u_h, e.u),
        };
        raw.min(self.w_kink)
    }

    /// Uninterrupted stretch below `u_h` on `site`, capped.
    fn window_down(&self, cfg: &Configuration, site: usize, u_h: f64) -> f64 {
        let raw = match cfg.site(site).prev_event(u_h) {
            None => 1.0,
            Some(e) => cyc_dist(e.u, u_h),
        };
        raw.min(self.w_kink)
    }

    /// Evaluate a fully specified move against the current configuration.
    /// Returns None when the move is structurally impossible (its reverse
    /// could never propose it, or it collides with existing events).
    pub fn evaluate(&self, cfg: &Configuration, choice: Choice) -> Option<Evaluated> {
        match choice {
            Choice::Open {
                site,
                u_start,
                delta,
            } => self.eval_open(cfg, site, u_start, delta),
            Choice::Close { fill } => self.eval_close(cfg, fill),
            Choice::Shift { u_new } => self.eval_shift(cfg, u_new),
            Choice::Insert {
                nbr_idx,
                u_head_new,
            } => self.eval_insert(cfg, nbr_idx, u_head_new),
            Choice::Delete { above } => self.eval_delete(cfg, above),
        }
    }

    fn eval_open(
        &self,
        cfg: &Configuration,
        site: usize,
        u_start: f64,
        delta: f64,
    ) -> Option<Evaluated> {
        if cfg.worm().is_some() || delta <= 0.0 || delta >= 1.0 {
            return None;
        }
        let u_end = frac(u_start + delta);
        if u_start == u_end || self.has_event_at(cfg, site, u_start) {
            return None;
        }
        if let Some(e) = cfg.site(site).next_event(u_start) {
            if cyc_dist(u_start, e.u) <= delta {
                return None;
            }
        }
        let occupied = cfg.occ_u(site, u_start) == 1;
        let cost = self.toggle_cost(cfg, site, u_start, delta);
        let log_dw = if occupied {
            self.model.beta * cost
        } else {
            -self.model.beta * cost
        };
        let m = cfg.n_sites() as f64;
        let log_ratio = log_dw + self.worm_fugacity.ln()
            + (KIND_PROBS[1] * 0.5).ln()
            - (KIND_PROBS[0] / m).ln()
            - self.log_trunc_exp_density(delta);
        Some(Evaluated {
            choice: Choice::Open {
                site,
                u_start,
                delta,
            },
            log_ratio,
            log_dw,
        })
    }

    fn eval_close(&self, cfg: &Configuration, fill: bool) -> Option<Evaluated> {
        let worm = cfg.worm()?;
        if worm.head.site != worm.tail.site {
            return None;
        }
        let s = worm.head.site;
        let (u_from, far_kind) = if fill {
            (worm.head.u, EventKind::Tail)
        } else {
            (worm.tail.u, EventKind::Head)
        };
        let next = cfg.site(s).next_event(u_from)?;
        if next.kind != far_kind {
            return None;
        }
        let delta = cyc_dist(u_from, next.u);
        let cost = self.toggle_cost(cfg, s, u_from, delta);
        // fill occupies the gap; erase removes the created segment
        let log_dw = if fill {
            -self.model.beta * cost
        } else {
            self.model.beta * cost
        };
        let m = cfg.n_sites() as f64;
        let log_ratio = log_dw - self.worm_fugacity.ln()
            + (KIND_PROBS[0] / m).ln()
            + self.log_trunc_exp_density(delta)
            - (KIND_PROBS[1] * 0.5).ln();
        Some(Evaluated {
            choice: Choice::Close { fill },
            log_ratio,
            log_dw,
        })
    }

    fn eval_shift(&self, cfg: &Configuration, u_new: f64) -> Option<Evaluated> {
        let worm = cfg.worm()?;
        let s = worm.head.site;
        let u_h = worm.head.u;
        if u_new == u_h {
            return None;
        }
        let tl = cfg.site(s);
        let next = tl.next_event(u_h)?;
        let prev = tl.prev_event(u_h)?;
        if next.u == u_h || prev.u == u_h {
            return None; // head is the only event: inconsistent state
        }
        let up_room = cyc_dist(u_h, next.u);
        let down_room = cyc_dist(prev.u, u_h);
        let dist_up = cyc_dist(u_h, u_new);
        let dist_down = cyc_dist(u_new, u_h);
        if dist_up.min(dist_down) >= self.w_shift {
            return None;
        }
        let log_dw = if dist_up < up_room {
            // head advances: the stretch (u_h, u_new) becomes occupied
            -self.model.beta * self.toggle_cost(cfg, s, u_h, dist_up)
        } else if dist_down < down_room {
            // head recedes: the stretch (u_new, u_h) is erased
            self.model.beta * self.toggle_cost(cfg, s, u_new, dist_down)
        } else {
            return None;
        };
        Some(Evaluated {
            choice: Choice::Shift { u_new },
            log_ratio: log_dw,
            log_dw,
        })
    }

    fn eval_insert(&self, cfg: &Configuration, nbr_idx: usize, u_head_new: f64) -> Option<Evaluated> {
        let worm = cfg.worm()?;
        let s = worm.head.site;
        let u_h = worm.head.u;
        let nbrs = &self.lattice.neighbors[s];
        if nbr_idx >= nbrs.len() {
            return None;
        }
        let (to, mult) = nbrs[nbr_idx];
        if self.has_event_at(cfg, to, u_h) || u_head_new == u_h {
            return None;
        }
        let kink_amp = self.model.t * mult as f64 * self.model.beta;
        let z = nbrs.len() as f64;
        let (log_dw, win) = if cfg.occ_u(to, u_h) == 0 {
            // grow upward: the stretch (u_h, u_head_new) on `to` fills
            let win = self.window_up(cfg, to, u_h);
            let d = cyc_dist(u_h, u_head_new);
            if d >= win {
                return None;
            }
            (
                kink_amp.ln() - self.model.beta * self.toggle_cost(cfg, to, u_h, d),
                win,
            )
        } else {
            // cut downward: the stretch (u_head_new, u_h) on `to` empties
            let win = self.window_down(cfg, to, u_h);
            let d = cyc_dist(u_head_new, u_h);
            if d >= win {
                return None;
            }
            (
                kink_amp.ln() + self.model.beta * self.toggle_cost(cfg, to, u_head_new, d),
                win,
            )
        };
        let log_ratio = log_dw + (KIND_PROBS[4] * 0.5).ln() - (KIND_PROBS[3] / z / win).ln();
        Some(Evaluated {
            choice: Choice::Insert {
                nbr_idx,
                u_head_new,
            },
            log_ratio,
            log_dw,
        })
    }

    fn eval_delete(&self, cfg: &Configuration, above: bool) -> Option<Evaluated> {
        let worm = cfg.worm()?;
        let s_head = worm.head.site;
        let u_h = worm.head.u;
        let tl = cfg.site(s_head);
        if above {
            // pass through the oncoming arrival kink just above the head:
            // fill the gap, remove the kink, land on its origin site
            let next = tl.next_event(u_h)?;
            if next.u == u_h {
                return None;
            }
            let (u_k, from) = match next.kind {
                EventKind::KinkIn { from } => (next.u, from),
                _ => return None,
            };
            let d = cyc_dist(u_h, u_k);
            // reverse cut-in window: stretch below u_k on this site once the
            // gap is filled
            let prev = tl.prev_event(u_h)?;
            let raw = if prev.u == u_k { 1.0 } else { cyc_dist(prev.u, u_k) };
            let win_rev = raw.min(self.w_kink);
            if d >= win_rev {
                return None;
            }
            let mult = self.lattice.neighbors[from]
                .iter()
                .find(|&&(site, _)| site == s_head)
                .map(|&(_, m)| m)?;
            let kink_amp = self.model.t * mult as f64 * self.model.beta;
            let log_dw =
                -kink_amp.ln() - self.model.beta * self.toggle_cost(cfg, s_head, u_h, d);
            let z = self.lattice.neighbors[from].len() as f64;
            let log_ratio =
                log_dw + (KIND_PROBS[3] / z / win_rev).ln() - (KIND_PROBS[4] * 0.5).ln();
            Some(Evaluated {
                choice: Choice::Delete { above },
                log_ratio,
                log_dw,
            })
        } else {
            // undo the kink just below the head (the head's own arrival)
            let prev = tl.prev_event(u_h)?;
            if prev.u == u_h {
                return None;
            }
            let (u_k, from) = match prev.kind {
                EventKind::KinkIn { from } => (prev.u, from),
                _ => return None,
            };
            let d = cyc_dist(u_k, u_h);
            // reverse grow-up window on the head site, as the insert move
            // would see it after the deletion
            let next = tl.next_event(u_h)?;
            let raw = if next.u == u_k {
                1.0 // site becomes empty after the delete
            } else {
                cyc_dist(u_k, next.u)
            };
            let win_rev = raw.min(self.w_kink);
            if d >= win_rev {
                return None;
            }
            let mult = self.lattice.neighbors[from]
                .iter()
                .find(|&&(site, _)| site == s_head)
                .map(|&(_, m)| m)?;
            let kink_amp = self.model.t * mult as f64 * self.model.beta;
            let log_dw =
                -kink_amp.ln() + self.model.beta * self.toggle_cost(cfg, s_head, u_k, d);
            let z = self.lattice.neighbors[from].len() as f64;
            let log_ratio =
                log_dw + (KIND_PROBS[3] / z / win_rev).ln() - (KIND_PROBS[4] * 0.5).ln();
            Some(Evaluated {
                choice: Choice::Delete { above },
                log_ratio,
                log_dw,
            })
        }
    }

    /// Mutate the configuration according to an accepted move and return the
    /// choice that exactly reverses it.
    pub fn apply(&self, cfg: &mut Configuration, ev: &Evaluated) -> Choice {
        cfg.tracked_log_weight.add(ev.log_dw);
        match ev.choice {
            Choice::Open {
                site,
                u_start,
                delta,
            } => {
                let u_end = frac(u_start + delta);
                let occupied = cfg.occ_u(site, u_start) == 1;
                let (head_u, tail_u, fill) = if occupied {
                    (u_start, u_end, true) // erased: reversed by close-fill
                } else {
                    (u_end, u_start, false) // created: reversed by close-erase
                };
                cfg.insert_event(
                    site,
                    Event {
                        u: head_u,
                        kind: EventKind::Head,
                    },
                );
                cfg.insert_event(
                    site,
                    Event {
                        u: tail_u,
                        kind: EventKind::Tail,
                    },
                );
                cfg.set_worm(Some(Worm {
                    head: WormEnd { site, u: head_u },
                    tail: WormEnd { site, u: tail_u },
                }));
                Choice::Close { fill }
            }
            Choice::Close { fill } => {
                let worm = *cfg.worm().expect("close applies in worm sector");
                let s = worm.head.site;
                cfg.remove_event(s, worm.head.u);
                cfg.remove_event(s, worm.tail.u);
                if cfg.site(s).events.is_empty() {
                    cfg.set_flat(s, if fill { 1 } else { 0 });
                }
                cfg.set_worm(None);
                let (u_start, delta) = if fill {
                    (worm.head.u, cyc_dist(worm.head.u, worm.tail.u))
                } else {
                    (worm.tail.u, cyc_dist(worm.tail.u, worm.head.u))
                };
                Choice::Open {
                    site: s,
                    u_start,
                    delta,
                }
            }
            Choice::Shift { u_new } => {
                let worm = *cfg.worm().expect("shift applies in worm sector");
                let s = worm.head.site;
                cfg.remove_event(s, worm.head.u);
                cfg.insert_event(
                    s,
                    Event {
                        u: u_new,
                        kind: EventKind::Head,
                    },
                );
                cfg.set_worm(Some(Worm {
                    head: WormEnd { site: s, u: u_new },
                    tail: worm.tail,
                }));
                Choice::Shift { u_new: worm.head.u }
            }
            Choice::Insert {
                nbr_idx,
                u_head_new,
            } => {
                let worm = *cfg.worm().expect("insert applies in worm sector");
                let s = worm.head.site;
                let u_h = worm.head.u;
                let (to, _) = self.lattice.neighbors[s][nbr_idx];
                // cut-in (occupied neighbor) is reversed by pass-through
                let was_occupied = cfg.occ_u(to, u_h) == 1;
                cfg.remove_event(s, u_h);
                cfg.insert_event(
                    s,
                    Event {
                        u: u_h,
                        kind: EventKind::KinkOut { to },
                    },
                );
                cfg.insert_event(
                    to,
                    Event {
                        u: u_h,
                        kind: EventKind::KinkIn { from: s },
                    },
                );
                cfg.insert_event(
                    to,
                    Event {
                        u: u_head_new,
                        kind: EventKind::Head,
                    },
                );
                cfg.set_worm(Some(Worm {
                    head: WormEnd {
                        site: to,
                        u: u_head_new,
                    },
                    tail: worm.tail,
                }));
                Choice::Delete {
                    above: was_occupied,
                }
            }
            Choice::Delete { above } => {
                let worm = *cfg.worm().expect("delete applies in worm sector");
                let s_head = worm.head.site;
                let u_h = worm.head.u;
                let adjacent = if above {
                    *cfg.site(s_head)
                        .next_event(u_h)
                        .expect("delete evaluated before apply")
                } else {
                    *cfg.site(s_head)
                        .prev_event(u_h)
                        .expect("delete evaluated before apply")
                };
                let (u_k, from) = match adjacent.kind {
                    EventKind::KinkIn { from } => (adjacent.u, from),
                    _ => unreachable!("delete applies next to an arrival kink"),
                };
                cfg.remove_event(s_head, u_h);
                cfg.remove_event(s_head, u_k);
                if cfg.site(s_head).events.is_empty() {
                    // above: the gap was filled; below: the stretch erased
                    cfg.set_flat(s_head, if above { 1 } else { 0 });
                }
                cfg.remove_event(from, u_k);
                cfg.insert_event(
                    from,
                    Event {
                        u: u_k,
                        kind: EventKind::Head,
                    },
                );
                let nbr_idx = self.lattice.neighbors[from]
                    .iter()
                    .position(|&(site, _)| site == s_head)
                    .expect("kink follows a bond");
                cfg.set_worm(Some(Worm {
                    head: WormEnd { site: from, u: u_k },
                    tail: worm.tail,
                }));
                Choice::Insert {
                    nbr_idx,
                    u_head_new: u_h,
                }
            }
        }
    }

    /// Audit helper: evaluate `choice`, force-apply it, evaluate the exact
    /// reverse on the mutated configuration, and undo it again. Returns the
    /// forward and reverse log ratios, which must sum to zero for detailed
    /// balance, and leaves the configuration as it was.
    pub fn audit_roundtrip(
        &self,
        cfg: &mut Configuration,
        choice: Choice,
    ) -> Option<(f64, f64)> {
        let fwd = self.evaluate(cfg, choice)?;
        if !fwd.log_ratio.is_finite() {
            return None;
        }
        let rev_choice = self.apply(cfg, &fwd);
        let rev = self
            .evaluate(cfg, rev_choice)
            .expect("reverse of an applied move must be proposable");
        let back = self.apply(cfg, &rev);
        debug_assert_eq!(back.kind() as usize, choice.kind() as usize);
        Some((fwd.log_ratio, rev.log_ratio))
    }

    /// One elementary update: draw, evaluate, Metropolis-accept, apply.
    /// Returns the move kind and whether it was accepted.
    pub fn update(
        &self,
        cfg: &mut Configuration,
        rng: &mut Pcg64,
        stats: &mut UpdateStats,
    ) -> (MoveKind, bool) {
        let choice = self.draw_choice(cfg, rng);
        let kind = choice.kind();
        stats.proposed[kind as usize] += 1;
        let Some(ev) = self.evaluate(cfg, choice) else {
            return (kind, false);
        };
        let accept = ev.log_ratio >= 0.0 || rng.random::<f64>() < ev.log_ratio.exp();
        if accept {
            self.apply(cfg, &ev);
            stats.accepted[kind as usize] += 1;
        }
        (kind, accept)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{
        build_interactions, build_lattice, InteractionKind, LatticeSpec, ModelSpec,
    };
    use rand::SeedableRng;

    fn audit_system(
        spec: LatticeSpec,
        kind: InteractionKind,
        model: ModelSpec,
        fock0: &[u8],
        pairs_per_kind: usize,
        seed: u64,
    ) {
        let lattice = build_lattice(spec).unwrap();
        let table = build_interactions(&lattice, kind, 4.0f64.min(spec.l as f64 / 2.0)).unwrap();
        let ctx = SamplerContext::new(&lattice, &table, &model, 1.3);
        let mut cfg = Configuration::new(lattice.n_sites, model.beta, fock0);
        let mut rng = Pcg64::seed_from_u64(seed);
        let mut stats = UpdateStats::default();
        let mut checked = [0usize; 5];
        let mut steps: u64 = 0;
        while checked.iter().any(|&c| c < pairs_per_kind) {
            steps += 1;
            assert!(
                steps < 3_000_000,
                "audit starved: only {checked:?} pairs found"
            );
            ctx.update(&mut cfg, &mut rng, &mut stats);
            let choice = ctx.draw_choice(&cfg, &mut rng);
            let k = choice.kind() as usize;
            if checked[k] >= pairs_per_kind {
                continue;
            }
            let before_kinks = cfg.n_kinks();
            if let Some((fwd, rev)) = ctx.audit_roundtrip(&mut cfg, choice) {
                assert!(
                    (fwd + rev).abs() < 1e-10,
                    "detailed balance violated for {choice:?}: {fwd} + {rev}"
                );
                assert_eq!(cfg.n_kinks(), before_kinks, "roundtrip must restore");
                cfg.validate().unwrap();
                checked[k] += 1;
            }
        }
    }

    #[test]
    fn reversibility_audit_interacting_square() {
        let model = ModelSpec::new(0.7, 2.5, 1.1, (1, 2), 3.0).unwrap();
        audit_system(
            LatticeSpec::square(3),
            InteractionKind::NearestNeighbor,
            model,
            &[1, 0, 1, 0, 1, 0, 1, 0, 1],
            5_000,
            42,
        );
    }

    #[test]
    fn reversibility_audit_free_dimer() {
        let model = ModelSpec::new(1.0, 0.0, 0.0, (1, 2), 10.0).unwrap();
        audit_system(
            LatticeSpec::chain(2),
            InteractionKind::NearestNeighbor,
            model,
            &[1, 0],
            5_000,
            7,
        );
    }

    #[test]
    fn reversibility_audit_kagome_hexagon() {
        let model = ModelSpec::new(1.0, 4.0, 9.0, (1, 2), 2.0).unwrap();
        audit_system(
            LatticeSpec::kagome(2),
            InteractionKind::Hexagon,
            model,
            &[1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
            5_000,
            11,
        );
    }

    #[test]
    fn reversibility_audit_duplicate_bonds() {
        // l = 2 square: doubled bond slots exercise the multiplicity factors
        let model = ModelSpec::new(0.9, 1.5, 0.8, (1, 2), 4.0).unwrap();
        audit_system(
            LatticeSpec::square(2),
            InteractionKind::NearestNeighbor,
            model,
            &[1, 0, 0, 1],
            5_000,
            13,
        );
    }
}
