//! Portable ensemble files.
//!
//! Layout: the magic bytes `MFA1`, a compact UTF-8 JSON manifest, a single
//! `\n`, then `rows × cols` IEEE-754 doubles, little-endian, column-major.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bifidelity::Ensemble;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::models::ParameterGrid;

pub const MAGIC: &[u8; 4] = b"MFA1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub model_id: String,
    pub fidelity: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<ParameterGrid>,
    pub parameters: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl Manifest {
    pub fn for_ensemble(ensemble: &Ensemble) -> Self {
        Manifest {
            model_id: ensemble.model_id.clone(),
            fidelity: ensemble.fidelity.clone(),
            rows: ensemble.snapshot_dim(),
            cols: ensemble.len(),
            grid: None,
            parameters: ensemble.parameters.clone(),
            seed: None,
            config_hash: None,
        }
    }
}

/// 64-bit FNV-1a, used to fingerprint the generating configuration.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

pub fn encode(ensemble: &Ensemble, manifest: &Manifest) -> Result<Vec<u8>> {
    if manifest.rows != ensemble.snapshot_dim() || manifest.cols != ensemble.len() {
        return Err(Error::Format(format!(
            "manifest says {}x{} but ensemble is {}x{}",
            manifest.rows,
            manifest.cols,
            ensemble.snapshot_dim(),
            ensemble.len()
        )));
    }
    let json = serde_json::to_vec(manifest).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = Vec::with_capacity(MAGIC.len() + json.len() + 1 + 8 * ensemble.snapshots.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&json);
    out.push(b'\n');
    for v in ensemble.snapshots.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(Ensemble, Manifest)> {
    let rest = bytes
        .strip_prefix(MAGIC.as_slice())
        .ok_or_else(|| Error::Format("missing MFA1 magic".into()))?;
    let newline = rest
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::Format("manifest is not terminated by a newline".into()))?;
    let manifest: Manifest = serde_json::from_slice(&rest[..newline])
        .map_err(|e| Error::Format(format!("manifest: {e}")))?;
    let payload = &rest[newline + 1..];
    let expected = manifest
        .rows
        .checked_mul(manifest.cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("manifest dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, manifest implies {expected}",
            payload.len()
        )));
    }
    if manifest.parameters.len() != manifest.cols {
        return Err(Error::Format(format!(
            "{} parameter vectors for {} columns",
            manifest.parameters.len(),
            manifest.cols
        )));
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let snapshots = DenseMatrix::from_vec(manifest.rows, manifest.cols, data);
    let ensemble = Ensemble::new(
        snapshots,
        manifest.parameters.clone(),
        manifest.fidelity.clone(),
        manifest.model_id.clone(),
    )?;
    Ok((ensemble, manifest))
}

pub fn write_ensemble<W: Write>(mut w: W, ensemble: &Ensemble, manifest: &Manifest) -> Result<()> {
    w.write_all(&encode(ensemble, manifest)?)?;
    Ok(())
}

pub fn read_ensemble<R: Read>(mut r: R) -> Result<(Ensemble, Manifest)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save(path: impl AsRef<Path>, ensemble: &Ensemble, manifest: &Manifest) -> Result<()> {
    fs::write(path, encode(ensemble, manifest)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(Ensemble, Manifest)> {
    decode(&fs::read(path)?)
}
