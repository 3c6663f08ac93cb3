//! On-disk artifacts: the samples container (snapshot streams plus resumable
//! checkpoints) and the run manifest.

use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::engine::{RunParams, SampleStream, Snapshot, UpdateStats};
use crate::worldline::CycleVector;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"BMCSAMP1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplesHeader {
    pub version: String,
    pub config_hash: String,
    pub lattice_fingerprint: u64,
    pub n_sites: usize,
    pub n_particles: usize,
    pub params: RunParams,
    pub replicas: u32,
}

fn write_snapshot(w: &mut impl Write, s: &Snapshot, n_sites: usize) -> std::io::Result<()> {
    w.write_all(&s.kinks.to_le_bytes())?;
    w.write_all(&s.diag_energy.to_bits().to_le_bytes())?;
    w.write_all(&s.avg_diag_energy.to_bits().to_le_bytes())?;
    w.write_all(&(s.cycles.0.len() as u16).to_le_bytes())?;
    for &c in &s.cycles.0 {
        w.write_all(&c.to_le_bytes())?;
    }
    let mut bits = vec![0u8; n_sites.div_ceil(8)];
    for (i, &n) in s.fock0.iter().enumerate() {
        if n == 1 {
            bits[i / 8] |= 1 << (i % 8);
        }
    }
    w.write_all(&bits)
}

fn read_snapshot(r: &mut impl Read, n_sites: usize) -> Result<Snapshot, CheckpointError> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b4)?;
    let kinks = u32::from_le_bytes(b4);
    r.read_exact(&mut b8)?;
    let diag_energy = f64::from_bits(u64::from_le_bytes(b8));
    r.read_exact(&mut b8)?;
    let avg_diag_energy = f64::from_bits(u64::from_le_bytes(b8));
    r.read_exact(&mut b2)?;
    let ncounts = u16::from_le_bytes(b2) as usize;
    let mut counts = Vec::with_capacity(ncounts);
    for _ in 0..ncounts {
        r.read_exact(&mut b4)?;
        counts.push(u32::from_le_bytes(b4));
    }
    let mut bits = vec![0u8; n_sites.div_ceil(8)];
    r.read_exact(&mut bits)?;
    let fock0 = (0..n_sites)
        .map(|i| (bits[i / 8] >> (i % 8)) & 1)
        .collect();
    Ok(Snapshot {
        cycles: CycleVector(counts),
        fock0,
        diag_energy,
        avg_diag_energy,
        kinks,
    })
}

pub fn write_samples(
    path: &Path,
    header: &SamplesHeader,
    streams: &[SampleStream],
    checkpoints: &[Checkpoint],
) -> Result<(), CheckpointError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    let hj = serde_json::to_vec(header).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    w.write_all(&(hj.len() as u32).to_le_bytes())?;
    w.write_all(&hj)?;
    w.write_all(&(streams.len() as u32).to_le_bytes())?;
    for (idx, stream) in streams.iter().enumerate() {
        w.write_all(&(idx as u32).to_le_bytes())?;
        w.write_all(&(stream.snapshots.len() as u64).to_le_bytes())?;
        for s in &stream.snapshots {
            write_snapshot(&mut w, s, header.n_sites)?;
        }
    }
    w.write_all(&(checkpoints.len() as u32).to_le_bytes())?;
    for ck in checkpoints {
        let mut buf = Vec::new();
        ck.write_to(&mut buf)?;
        w.write_all(&(buf.len() as u64).to_le_bytes())?;
        w.write_all(&buf)?;
    }
    Ok(())
}

pub struct SamplesFile {
    pub header: SamplesHeader,
    pub streams: Vec<Vec<Snapshot>>,
    pub checkpoints: Vec<Checkpoint>,
}

pub fn read_samples(path: &Path) -> Result<SamplesFile, CheckpointError> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let mut hj = vec![0u8; u32::from_le_bytes(b4) as usize];
    r.read_exact(&mut hj)?;
    let header: SamplesHeader =
        serde_json::from_slice(&hj).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    r.read_exact(&mut b4)?;
    let n_streams = u32::from_le_bytes(b4) as usize;
    let mut streams = Vec::with_capacity(n_streams);
    for _ in 0..n_streams {
        r.read_exact(&mut b4)?;
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut snaps = Vec::with_capacity(n);
        for _ in 0..n {
            snaps.push(read_snapshot(&mut r, header.n_sites)?);
        }
        streams.push(snaps);
    }
    r.read_exact(&mut b4)?;
    let n_ck = u32::from_le_bytes(b4) as usize;
    let mut checkpoints = Vec::with_capacity(n_ck);
    for _ in 0..n_ck {
        r.read_exact(&mut b8)?;
        let len = u64::from_le_bytes(b8) as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        checkpoints.push(Checkpoint::read_from(&mut buf.as_slice())?);
    }
    Ok(SamplesFile {
        header,
        streams,
        checkpoints,
    })
}

/// Streams as read back lack counters; wrap them for the estimators.
pub fn stream_from_snapshots(n_particles: usize, snapshots: Vec<Snapshot>) -> SampleStream {
    SampleStream {
        n_particles,
        snapshots,
        stats: UpdateStats::default(),
        sweeps_run: 0,
        max_weight_drift: 0.0,
        invariant_violations: 0,
    }
}

/// Manifest capturing everything needed to reproduce a run.
pub fn manifest_json(
    config_hash: u64,
    seed: u64,
    replicas: u32,
    config_text: &str,
    extra: serde_json::Value,
) -> String {
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    serde_json::to_string_pretty(&serde_json::json!({
        "code_version": env!("CARGO_PKG_VERSION"),
        "config_hash": format!("{config_hash:016x}"),
        "seed": seed,
        "replicas": replicas,
        "created_unix": created,
        "extra": extra,
        "config_text": config_text,
    }))
    .expect("manifest serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{InteractionKind, LatticeSpec, ModelSpec};

    #[test]
    fn samples_roundtrip() {
        let model = ModelSpec::new(1.0, 0.0, 0.0, (1, 2), 2.0).unwrap();
        let params = RunParams::new(model, LatticeSpec::chain(2), InteractionKind::NearestNeighbor);
        let header = SamplesHeader {
            version: "test".into(),
            config_hash: "abcd".into(),
            lattice_fingerprint: 7,
            n_sites: 2,
            n_particles: 1,
            params,
            replicas: 1,
        };
        let snaps = vec![
            Snapshot {
                cycles: CycleVector(vec![1]),
                fock0: vec![1, 0],
                diag_energy: 0.0,
                avg_diag_energy: 0.25,
                kinks: 4,
            },
            Snapshot {
                cycles: CycleVector(vec![1]),
                fock0: vec![0, 1],
                diag_energy: 0.0,
                avg_diag_energy: -0.5,
                kinks: 2,
            },
        ];
        let stream = stream_from_snapshots(1, snaps.clone());
        let dir = std::env::temp_dir().join("braidmc_artifacts_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("samples.bin");
        write_samples(&path, &header, &[stream], &[]).unwrap();
        let back = read_samples(&path).unwrap();
        assert_eq!(back.header.n_particles, 1);
        assert_eq!(back.streams.len(), 1);
        assert_eq!(back.streams[0].len(), 2);
        assert_eq!(back.streams[0][0].fock0, snaps[0].fock0);
        assert_eq!(back.streams[0][1].kinks, 2);
        assert_eq!(
            back.streams[0][1].avg_diag_energy.to_bits(),
            snaps[1].avg_diag_energy.to_bits()
        );
    }
}
