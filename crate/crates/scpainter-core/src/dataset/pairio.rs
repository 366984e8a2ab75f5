//! Training-pair directories: the conditioning-bundle layout plus
//! `target_%04d.png` and `embed.scpt`.

use std::path::{Path, PathBuf};

use ndarray::{s, Array1, Array4};

use super::{TrainingPair, EMBED_DIM};
use crate::conditioning::{load_bundle, save_bundle};
use crate::{imageio, tensor, Error, Result};

pub fn save_pair(dir: impl AsRef<Path>, pair: &TrainingPair) -> Result<()> {
    let dir = dir.as_ref();
    pair.validate()?;
    save_bundle(dir, &pair.bundle)?;
    let (t_len, ..) = pair.target.dim();
    for t in 0..t_len {
        let img = pair.target.slice(s![t, .., .., ..]).to_owned();
        imageio::save_rgb(dir.join(format!("target_{t:04}.png")), &img)?;
    }
    let embed_f32: Array1<f32> = pair.first_frame_embed.mapv(|v| v as f32);
    tensor::write_tensor(dir.join("embed.scpt"), embed_f32.view().into_dyn())?;
    Ok(())
}

pub fn load_pair(dir: impl AsRef<Path>) -> Result<TrainingPair> {
    let dir = dir.as_ref();
    let bundle = load_bundle(dir)?;
    let (t_len, _, h, w) = bundle.i.dim();
    let mut target = Array4::<f32>::zeros((t_len, 3, h, w));
    for t in 0..t_len {
        let img = imageio::load_rgb(dir.join(format!("target_{t:04}.png")))?;
        if img.dim() != (3, h, w) {
            return Err(Error::shape(format!("(3, {h}, {w})"), format!("{:?}", img.dim())));
        }
        target.slice_mut(s![t, .., .., ..]).assign(&img);
    }
    let embed_path = dir.join("embed.scpt");
    let embed_raw = tensor::read_tensor(&embed_path)?;
    if embed_raw.ndim() != 1 || embed_raw.len() != EMBED_DIM {
        return Err(Error::malformed(
            &embed_path,
            format!("expected a rank-1 tensor of length {EMBED_DIM}"),
        ));
    }
    let mut embed: Array1<f64> = Array1::from_iter(embed_raw.iter().map(|&v| v as f64));
    // f32 storage nudges the norm off 1; restore it.
    let norm = embed.dot(&embed).sqrt();
    if norm > 1e-12 {
        embed /= norm;
    }
    let pair = TrainingPair {
        bundle,
        target,
        first_frame_embed: embed,
    };
    pair.validate()?;
    Ok(pair)
}

/// Sorted `pair_*` subdirectories of a pairs directory.
pub fn list_pair_dirs(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir()
            && path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("pair_"))
        {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth::{synth_scene, SynthSceneSpec};
    use crate::dataset::build_insertion_pair;
    use tempfile::tempdir;

    #[test]
    fn pair_roundtrip() {
        let mut spec = SynthSceneSpec::canonical();
        spec.width = 16;
        spec.height = 16;
        spec.focal = 16.0;
        spec.n_frames = 1;
        let scene = synth_scene(&spec, 3).unwrap();
        let pair = build_insertion_pair(&scene, 0, 0).unwrap();

        let dir = tempdir().unwrap();
        let pair_dir = dir.path().join("pair_0000");
        save_pair(&pair_dir, &pair).unwrap();
        let back = load_pair(&pair_dir).unwrap();

        assert_eq!(back.bundle.coverage, pair.bundle.coverage);
        assert_eq!(back.target.dim(), pair.target.dim());
        // Unit norm restored after f32 storage.
        assert!((back.first_frame_embed.dot(&back.first_frame_embed) - 1.0).abs() < 1e-12);
        let cos: f64 = back.first_frame_embed.dot(&pair.first_frame_embed);
        assert!(cos > 1.0 - 1e-9, "embedding drifted: cos = {cos}");

        let dirs = list_pair_dirs(dir.path()).unwrap();
        assert_eq!(dirs, vec![pair_dir]);
    }
}
