//! Weights container:
//!
//! ```text
//! "RPLW" | version u32 LE | header length u64 LE | header JSON | payload
//! ```
//!
//! The header holds the feature-schema fingerprint, free-form metadata, the
//! tensor manifest (name, shape) and the SHA-256 of the payload. The payload
//! is every tensor's values in manifest order as f64 little endian.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{NnetError, ParamStore, Tensor};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"RPLW";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightsFile {
    pub store: ParamStore,
    pub fingerprint: String,
    pub meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    fingerprint: String,
    meta: BTreeMap<String, String>,
    tensors: Vec<(String, Vec<usize>)>,
    sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn encode_weights(store: &ParamStore, fingerprint: &str, meta: &BTreeMap<String, String>) -> Vec<u8> {
    let mut payload = Vec::with_capacity(store.num_scalars() * 8);
    for (_, t) in store.iter() {
        for v in &t.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = Header {
        fingerprint: fingerprint.to_string(),
        meta: meta.clone(),
        tensors: store.iter().map(|(n, t)| (n.to_string(), t.shape.clone())).collect(),
        sha256: hex(&Sha256::digest(&payload)),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + payload.len());
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    out
}

pub fn decode_weights(bytes: &[u8]) -> Result<WeightsFile, NnetError> {
    let corrupt = |m: &str| NnetError::CorruptFile(m.to_string());
    if bytes.len() < 16 || &bytes[..4] != WEIGHTS_MAGIC {
        return Err(corrupt("missing RPLW header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != WEIGHTS_VERSION {
        return Err(NnetError::CorruptFile(format!("unsupported version {version}")));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() < hlen {
        return Err(corrupt("truncated header"));
    }
    let header: Header = serde_json::from_slice(&body[..hlen]).map_err(|e| NnetError::CorruptFile(e.to_string()))?;
    let payload = &body[hlen..];
    let total: usize = header.tensors.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
    if payload.len() != total * 8 {
        return Err(NnetError::CorruptFile(format!("payload has {} bytes, manifest needs {}", payload.len(), total * 8)));
    }
    if hex(&Sha256::digest(payload)) != header.sha256 {
        return Err(corrupt("payload checksum mismatch"));
    }
    let mut store = ParamStore::new();
    let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for (name, shape) in header.tensors {
        let n = shape.iter().product();
        let data: Vec<f64> = values.by_ref().take(n).collect();
        if store.get(&name).is_some() {
            return Err(NnetError::CorruptFile(format!("duplicate tensor {name}")));
        }
        store.insert(name, Tensor::new(shape, data)?);
    }
    Ok(WeightsFile { store, fingerprint: header.fingerprint, meta: header.meta })
}

pub fn save_weights(path: &Path, store: &ParamStore, fingerprint: &str, meta: &BTreeMap<String, String>) -> Result<(), NnetError> {
    std::fs::write(path, encode_weights(store, fingerprint, meta)).map_err(|e| NnetError::Io(format!("{}: {e}", path.display())))
}

pub fn load_weights(path: &Path) -> Result<WeightsFile, NnetError> {
    let bytes = std::fs::read(path).map_err(|e| NnetError::Io(format!("{}: {e}", path.display())))?;
    decode_weights(&bytes)
}

/// Loads weights and rejects them unless they were saved for `expected`.
pub fn load_weights_for(path: &Path, expected: &str) -> Result<WeightsFile, NnetError> {
    let w = load_weights(path)?;
    if w.fingerprint != expected {
        return Err(NnetError::SchemaMismatch { expected: expected.to_string(), found: w.fingerprint });
    }
    Ok(w)
}
