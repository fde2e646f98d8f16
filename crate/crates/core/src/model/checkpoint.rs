//! Checkpoint files: a JSON header describing the model shape followed by
//! every parameter as little-endian f64 in a fixed order.
//!
//! Layout: 8-byte magic `PGCKPT1\0`, u32-le header length, the JSON
//! header, then the parameter blob. Blob order matches
//! [`ModelParams::to_flat_vec`]: for each SAGE layer `w_self`, `w_neigh`,
//! `bias` (row-major), then the GNN projection weight and bias, then the
//! head dense weight, dense bias, projection weight, projection bias.
//! Save followed by load is bitwise lossless.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelError, ModelParams};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PGCKPT1\0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub lambda: f64,
    pub dropout_rate: f64,
    pub seed: u64,
    pub epoch: usize,
    /// Decision threshold selected during training.
    pub threshold: f64,
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    params: &ModelParams,
    meta: &CheckpointMeta,
) -> Result<(), ModelError> {
    let path = path.as_ref();
    let header = serde_json::to_vec(meta).expect("meta serializes");
    let flat = params.to_flat_vec();
    let mut bytes = Vec::with_capacity(16 + header.len() + flat.len() * 8);
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&header);
    for v in flat {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelParams, CheckpointMeta), ModelError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let invalid = |msg: &str| ModelError::InvalidCheckpoint(msg.to_string());
    if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(invalid("bad magic"));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let blob_start = 12 + header_len;
    if bytes.len() < blob_start {
        return Err(invalid("truncated header"));
    }
    let meta: CheckpointMeta = serde_json::from_slice(&bytes[12..blob_start])
        .map_err(|e| invalid(&format!("bad header: {e}")))?;
    let mut params = ModelParams::init(
        meta.in_dim,
        meta.hidden_dim,
        meta.n_layers,
        meta.lambda,
        meta.dropout_rate,
        0,
    )?;
    let expected = params.param_count();
    let blob = &bytes[blob_start..];
    if blob.len() != expected * 8 {
        return Err(invalid(&format!(
            "parameter blob holds {} bytes, expected {}",
            blob.len(),
            expected * 8
        )));
    }
    let flat: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite parameter"));
    }
    params.set_from_flat(&flat);
    Ok((params, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> CheckpointMeta {
        CheckpointMeta {
            in_dim: 5,
            hidden_dim: 3,
            n_layers: 2,
            lambda: 0.7,
            dropout_rate: 0.1,
            seed: 42,
            epoch: 17,
            threshold: 0.35,
        }
    }

    #[test]
    fn checkpoint_roundtrips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let params = ModelParams::init(5, 3, 2, 0.7, 0.1, 42).unwrap();
        save_checkpoint(&path, &params, &meta()).unwrap();
        let (loaded, loaded_meta) = load_checkpoint(&path).unwrap();
        assert_eq!(loaded_meta, meta());
        let a = params.to_flat_vec();
        let b = loaded.to_flat_vec();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"not a checkpoint").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(ModelError::InvalidCheckpoint(_))
        ));

        // Valid header, truncated blob.
        let params = ModelParams::init(5, 3, 2, 0.7, 0.1, 42).unwrap();
        save_checkpoint(&path, &params, &meta()).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(ModelError::InvalidCheckpoint(_))
        ));
    }
}
