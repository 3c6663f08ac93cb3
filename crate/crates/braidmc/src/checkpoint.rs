//! Binary checkpoint format for worldline configurations plus sampler
//! counters, with a JSON debug mirror.
//!
//! Layout: 8-byte magic, length-prefixed JSON header (lattice fingerprint,
//! model parameters, RNG state, counters, tracked log weight), then per-site
//! event lists, then the worm record.

use crate::engine::UpdateStats;
use crate::lattice::ModelSpec;
use crate::worldline::{Configuration, Event, EventKind, SiteTimeline, Worm, WormEnd};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

const MAGIC: &[u8; 8] = b"BMCWLCK1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: not a checkpoint file")]
    BadMagic,
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

#[derive(Serialize, Deserialize)]
struct Header {
    lattice_fingerprint: u64,
    model: ModelSpec,
    rng: Pcg64,
    stats: UpdateStats,
    sweeps_done: u64,
    samples_done: u64,
    tracked_log_weight: f64,
    n_sites: u32,
}

/// A resumable sampler state.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub lattice_fingerprint: u64,
    pub model: ModelSpec,
    pub rng: Pcg64,
    pub stats: UpdateStats,
    pub sweeps_done: u64,
    pub samples_done: u64,
    pub config: Configuration,
}

fn event_tag(kind: &EventKind) -> (u8, u32) {
    match kind {
        EventKind::KinkOut { to } => (0, *to as u32),
        EventKind::KinkIn { from } => (1, *from as u32),
        EventKind::Head => (2, 0),
        EventKind::Tail => (3, 0),
    }
}

fn tag_event(tag: u8, partner: u32) -> Result<EventKind, CheckpointError> {
    Ok(match tag {
        0 => EventKind::KinkOut {
            to: partner as usize,
        },
        1 => EventKind::KinkIn {
            from: partner as usize,
        },
        2 => EventKind::Head,
        3 => EventKind::Tail,
        other => return Err(CheckpointError::Malformed(format!("event tag {other}"))),
    })
}

impl Checkpoint {
    pub fn write_to(&self, w: &mut impl Write) -> Result<(), CheckpointError> {
        w.write_all(MAGIC)?;
        let header = Header {
            lattice_fingerprint: self.lattice_fingerprint,
            model: self.model,
            rng: self.rng.clone(),
            stats: self.stats.clone(),
            sweeps_done: self.sweeps_done,
            samples_done: self.samples_done,
            tracked_log_weight: self.config.tracked_value(),
            n_sites: self.config.n_sites() as u32,
        };
        let header_json =
            serde_json::to_vec(&header).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        w.write_all(&(header_json.len() as u32).to_le_bytes())?;
        w.write_all(&header_json)?;
        for tl in self.config.raw_sites() {
            w.write_all(&[tl.n_flat])?;
            w.write_all(&(tl.events.len() as u32).to_le_bytes())?;
            for ev in &tl.events {
                w.write_all(&ev.u.to_bits().to_le_bytes())?;
                let (tag, partner) = event_tag(&ev.kind);
                w.write_all(&[tag])?;
                w.write_all(&partner.to_le_bytes())?;
            }
        }
        match self.config.worm() {
            None => w.write_all(&[0u8])?,
            Some(worm) => {
                w.write_all(&[1u8])?;
                w.write_all(&(worm.head.site as u32).to_le_bytes())?;
                w.write_all(&worm.head.u.to_bits().to_le_bytes())?;
                w.write_all(&(worm.tail.site as u32).to_le_bytes())?;
                w.write_all(&worm.tail.u.to_bits().to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut len4 = [0u8; 4];
        r.read_exact(&mut len4)?;
        let mut header_json = vec![0u8; u32::from_le_bytes(len4) as usize];
        r.read_exact(&mut header_json)?;
        let header: Header = serde_json::from_slice(&header_json)
            .map_err(|e| CheckpointError::Malformed(e.to_string()))?;

        let mut sites = Vec::with_capacity(header.n_sites as usize);
        let mut b1 = [0u8; 1];
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        for _ in 0..header.n_sites {
            r.read_exact(&mut b1)?;
            let n_flat = b1[0];
            r.read_exact(&mut b4)?;
            let n_events = u32::from_le_bytes(b4) as usize;
            let mut events = Vec::with_capacity(n_events);
            for _ in 0..n_events {
                r.read_exact(&mut b8)?;
                let u = f64::from_bits(u64::from_le_bytes(b8));
                r.read_exact(&mut b1)?;
                let tag = b1[0];
                r.read_exact(&mut b4)?;
                events.push(Event {
                    u,
                    kind: tag_event(tag, u32::from_le_bytes(b4))?,
                });
            }
            sites.push(SiteTimeline { events, n_flat });
        }
        r.read_exact(&mut b1)?;
        let worm = if b1[0] == 1 {
            r.read_exact(&mut b4)?;
            let head_site = u32::from_le_bytes(b4) as usize;
            r.read_exact(&mut b8)?;
            let head_u = f64::from_bits(u64::from_le_bytes(b8));
            r.read_exact(&mut b4)?;
            let tail_site = u32::from_le_bytes(b4) as usize;
            r.read_exact(&mut b8)?;
            let tail_u = f64::from_bits(u64::from_le_bytes(b8));
            Some(Worm {
                head: WormEnd {
                    site: head_site,
                    u: head_u,
                },
                tail: WormEnd {
                    site: tail_site,
                    u: tail_u,
                },
            })
        } else {
            None
        };
        let config = Configuration::from_parts(
            header.model.beta,
            sites,
            worm,
            header.tracked_log_weight,
        )
        .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        Ok(Checkpoint {
            lattice_fingerprint: header.lattice_fingerprint,
            model: header.model,
            rng: header.rng,
            stats: header.stats,
            sweeps_done: header.sweeps_done,
            samples_done: header.samples_done,
            config,
        })
    }

    /// Human-readable mirror of the checkpoint contents.
    pub fn to_debug_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "lattice_fingerprint": self.lattice_fingerprint,
            "model": self.model,
            "sweeps_done": self.sweeps_done,
            "samples_done": self.samples_done,
            "stats": self.stats,
            "n_kinks": self.config.n_kinks(),
            "worm": self.config.worm(),
            "tracked_log_weight": self.config.tracked_value(),
            "sites": self.config.raw_sites(),
        }))
        .expect("checkpoint serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{RunParams, WormSampler};
    use crate::lattice::{
        build_interactions, build_lattice, InteractionKind, LatticeSpec, ModelSpec,
    };
    use rand::SeedableRng;

    fn sampler_state(sweeps: usize, seed: u64) -> Checkpoint {
        let lattice = build_lattice(LatticeSpec::square(3)).unwrap();
        let table = build_interactions(&lattice, InteractionKind::NearestNeighbor, 0.0).unwrap();
        let model = ModelSpec::new(1.0, 2.0, 4.0, (1, 3), 3.0).unwrap();
        let fock0: Vec<u8> = (0..9).map(|s| (s % 3 == 0) as u8).collect();
        let mut sampler = WormSampler::new(&lattice, &table, &model, &fock0, seed, 1.0);
        for _ in 0..sweeps {
            sampler.sweep();
        }
        Checkpoint {
            lattice_fingerprint: lattice.fingerprint(),
            model,
            rng: sampler.rng.clone(),
            stats: sampler.stats.clone(),
            sweeps_done: sweeps as u64,
            samples_done: 0,
            config: sampler.config.clone(),
        }
    }

    #[test]
    fn roundtrip_bytes_are_stable() {
        let ck = sampler_state(500, 21);
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(&mut buf.as_slice()).unwrap();
        let mut buf2 = Vec::new();
        back.write_to(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert_eq!(back.config.n_kinks(), ck.config.n_kinks());
        assert_eq!(back.sweeps_done, 500);
        back.config.validate().unwrap();
    }

    #[test]
    fn resumed_sampler_reproduces_fresh_run() {
        let lattice = build_lattice(LatticeSpec::square(3)).unwrap();
        let table = build_interactions(&lattice, InteractionKind::NearestNeighbor, 0.0).unwrap();
        let model = ModelSpec::new(1.0, 2.0, 4.0, (1, 3), 3.0).unwrap();
        let fock0: Vec<u8> = (0..9).map(|s| (s % 3 == 0) as u8).collect();

        // uninterrupted reference
        let mut full = WormSampler::new(&lattice, &table, &model, &fock0, 77, 1.0);
        for _ in 0..800 {
            full.sweep();
        }

        // checkpoint at 500 sweeps, then resume
        let mut part = WormSampler::new(&lattice, &table, &model, &fock0, 77, 1.0);
        for _ in 0..500 {
            part.sweep();
        }
        let ck = Checkpoint {
            lattice_fingerprint: lattice.fingerprint(),
            model,
            rng: part.rng.clone(),
            stats: part.stats.clone(),
            sweeps_done: 500,
            samples_done: 0,
            config: part.config.clone(),
        };
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let loaded = Checkpoint::read_from(&mut buf.as_slice()).unwrap();

        let mut resumed = WormSampler::new(&lattice, &table, &model, &fock0, 0, 1.0);
        resumed.config = loaded.config;
        resumed.rng = loaded.rng;
        resumed.stats = loaded.stats;
        for _ in 0..300 {
            resumed.sweep();
        }

        assert_eq!(resumed.config.n_kinks(), full.config.n_kinks());
        assert_eq!(
            resumed.config.fock_state(0.0).ok(),
            full.config.fock_state(0.0).ok()
        );
        assert_eq!(resumed.stats.proposed, full.stats.proposed);
        assert_eq!(resumed.stats.accepted, full.stats.accepted);
    }

    #[test]
    fn rejects_corrupt_input() {
        let ck = sampler_state(50, 5);
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(
            Checkpoint::read_from(&mut buf.as_slice()),
            Err(CheckpointError::BadMagic)
        ));
        let short = &buf[..buf.len() / 2];
        assert!(Checkpoint::read_from(&mut &short[..]).is_err());
    }

    #[test]
    fn debug_json_mentions_contents() {
        let ck = sampler_state(50, 5);
        let json = ck.to_debug_json();
        assert!(json.contains("tracked_log_weight"));
        assert!(json.contains("lattice_fingerprint"));
    }

    #[test]
    fn run_params_serializable_for_headers() {
        let model = ModelSpec::new(1.0, 2.0, 4.0, (1, 3), 3.0).unwrap();
        let p = RunParams::new(model, LatticeSpec::square(3), InteractionKind::NearestNeighbor);
        let s = serde_json::to_string(&p).unwrap();
        let back: RunParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back.model, p.model);
        let _ = Pcg64::seed_from_u64(back.seed);
    }
}
