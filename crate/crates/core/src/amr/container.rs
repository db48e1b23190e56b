//! On-disk AMR container: a directory with `manifest.json` and `data.bin`.
//!
//! `data.bin` concatenates every patch payload as little-endian f64,
//! x-fastest, coarse level first. The manifest records each patch's box and
//! byte offset, plus a SHA-256 of `data.bin`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AmrDataset, AmrLevel, IndexBox, Patch};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "data.bin";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    coarse_dims: [usize; 3],
    refinement_ratio: usize,
    levels: Vec<ManifestLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    data_sha256: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestLevel {
    patches: Vec<ManifestPatch>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestPatch {
    lo: [i64; 3],
    hi: [i64; 3],
    offset: u64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_container(ds: &AmrDataset, dir: impl AsRef<Path>) -> Result<()> {
    ds.ensure_valid()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut data = Vec::with_capacity(ds.stored_values() * 8);
    let mut levels = Vec::with_capacity(ds.num_levels());
    for level in &ds.levels {
        let mut patches = Vec::with_capacity(level.patches.len());
        for patch in &level.patches {
            patches.push(ManifestPatch {
                lo: patch.bounds.lo,
                hi: patch.bounds.hi,
                offset: data.len() as u64,
            });
            for v in &patch.data {
                data.extend_from_slice(&v.to_le_bytes());
            }
        }
        levels.push(ManifestLevel { patches });
    }
    let manifest = Manifest {
        version: VERSION,
        coarse_dims: ds.coarse_dims,
        refinement_ratio: ds.refinement_ratio,
        levels,
        data_sha256: Some(sha256_hex(&data)),
    };
    fs::write(dir.join(DATA_FILE), &data)?;
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_container(dir: impl AsRef<Path>) -> Result<AmrDataset> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{MANIFEST_FILE}: {e}")))?;
    if manifest.version != VERSION {
        return Err(Error::Malformed(format!("unsupported version {}", manifest.version)));
    }
    let data = fs::read(dir.join(DATA_FILE))?;
    if let Some(expected) = manifest.data_sha256 {
        let found = sha256_hex(&data);
        if found != expected {
            return Err(Error::ChecksumMismatch { expected, found });
        }
    }
    let mut levels = Vec::with_capacity(manifest.levels.len());
    for (l, level) in manifest.levels.into_iter().enumerate() {
        let mut patches = Vec::with_capacity(level.patches.len());
        for (p, mp) in level.patches.into_iter().enumerate() {
            let bounds = IndexBox::new(mp.lo, mp.hi)
                .map_err(|_| Error::Malformed(format!("level {l} patch {p}: lo > hi")))?;
            if mp.offset % 8 != 0 {
                return Err(Error::Malformed(format!("level {l} patch {p}: unaligned offset")));
            }
            let start = mp.offset as usize;
            let end = start + bounds.volume() * 8;
            let bytes = data.get(start..end).ok_or_else(|| {
                Error::Truncated(format!(
                    "level {l} patch {p} needs bytes {start}..{end}, {DATA_FILE} has {}",
                    data.len()
                ))
            })?;
            let values = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            patches.push(Patch::new(bounds, values)?);
        }
        levels.push(AmrLevel::new(l, patches));
    }
    let ds = AmrDataset {
        coarse_dims: manifest.coarse_dims,
        refinement_ratio: manifest.refinement_ratio,
        levels,
    };
    ds.ensure_valid()?;
    Ok(ds)
}
