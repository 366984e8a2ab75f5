//! Checkpoint and loss-curve files.
//!
//! A checkpoint is one binary file: a little-endian `u32` header length,
//! a JSON header (format tag, field shapes, seed, iteration), then the
//! parameters as a little-endian `f32` blob in the fixed field order of
//! [`DenoiserParams::field_shapes`]. The loss curve is a two-column CSV
//! `iteration,loss`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::denoiser::DenoiserParams;
use crate::{Error, Result};

const FORMAT_TAG: &str = "scpainter-checkpoint-v1";

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    shapes: Vec<(String, Vec<usize>)>,
    seed: u64,
    iteration: usize,
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    params: &DenoiserParams,
    seed: u64,
    iteration: usize,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    let header = CheckpointHeader {
        format: FORMAT_TAG.to_string(),
        shapes: DenoiserParams::field_shapes()
            .into_iter()
            .map(|(n, s)| (n.to_string(), s))
            .collect(),
        seed,
        iteration,
    };
    let header_json = serde_json::to_vec(&header).map_err(|e| Error::malformed(path, e.to_string()))?;
    w.write_u32::<LittleEndian>(header_json.len() as u32)
        .map_err(io_err)?;
    w.write_all(&header_json).map_err(io_err)?;
    for v in params.to_flat() {
        w.write_f32::<LittleEndian>(v as f32).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(DenoiserParams, u64, usize)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let io_err = |e| Error::io(path, e);

    let header_len = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    if header_len > 1 << 20 {
        return Err(Error::malformed(path, "implausible header length"));
    }
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes).map_err(io_err)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    if header.format != FORMAT_TAG {
        return Err(Error::malformed(path, format!("unknown format '{}'", header.format)));
    }
    let expected: Vec<(String, Vec<usize>)> = DenoiserParams::field_shapes()
        .into_iter()
        .map(|(n, s)| (n.to_string(), s))
        .collect();
    if header.shapes != expected {
        return Err(Error::malformed(path, "parameter shapes do not match this build"));
    }

    let n = DenoiserParams::n_params();
    let mut blob = vec![0f32; n];
    r.read_f32_into::<LittleEndian>(&mut blob).map_err(io_err)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(io_err)? != 0 {
        return Err(Error::malformed(path, "trailing bytes after parameter blob"));
    }
    let flat: Vec<f64> = blob.into_iter().map(|v| v as f64).collect();
    Ok((DenoiserParams::from_flat(&flat)?, header.seed, header.iteration))
}

pub fn save_loss_csv(path: impl AsRef<Path>, losses: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("iteration,loss\n");
    for (i, l) in losses.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn checkpoint_roundtrip_at_f32_precision() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let params = DenoiserParams::init(99);
        save_checkpoint(&path, &params, 42, 500).unwrap();
        let (back, seed, iter) = load_checkpoint(&path).unwrap();
        assert_eq!(seed, 42);
        assert_eq!(iter, 500);
        for (a, b) in back.to_flat().iter().zip(params.to_flat()) {
            assert_eq!(*a, b as f32 as f64);
        }
    }

    #[test]
    fn corrupt_checkpoint_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"\x04\x00\x00\x00{}xx").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }

    #[test]
    fn truncated_blob_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &DenoiserParams::zeros(), 0, 0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }

    #[test]
    fn loss_csv_format() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("loss.csv");
        save_loss_csv(&path, &[1.5, 0.75]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "iteration,loss\n0,1.5\n1,0.75\n");
    }
}
