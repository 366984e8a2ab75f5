use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use scpainter_core::dataset::manifest::load_scene_with;
use scpainter_core::dataset::pairio::save_pair;
use scpainter_core::dataset::{
    build_insertion_pair, build_nvs_pair, derive_seed, filter_asset_bbox, sample_neighbors,
    FilterDecision, DEFAULT_FILTER_TOL, NEIGHBOR_WINDOW,
};
use scpainter_core::dataset::Scene;
use scpainter_core::ply::AssetConvention;
use scpainter_core::{Error, Result};

use crate::lock::OutputLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairKind {
    Nvs,
    Insertion,
    Both,
}

/// Build training pairs from a scene: neighbor-projection pairs per
/// frame and/or asset removal/replacement pairs per placement.
#[derive(Debug, Args)]
pub struct BuildPairsOpts {
    /// Path to scene.json.
    #[arg(long)]
    pub scene: PathBuf,
    /// Neighbor frames projected per NVS pair.
    #[arg(long, default_value_t = scpainter_core::dataset::DEFAULT_NEIGHBOR_COUNT)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PairKind::Nvs)]
    pub kind: PairKind,
    /// Per-axis tolerance for rejecting assets whose canonical dims
    /// deviate from the placement box dims.
    #[arg(long, default_value_t = DEFAULT_FILTER_TOL)]
    pub filter_tol: f64,
    /// Treat asset PLYs as reference-convention exports.
    #[arg(long = "gs-reference-convention", default_value_t = false)]
    pub gs_reference_convention: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct PairEntry {
    dir: String,
    kind: &'static str,
    frame: usize,
    asset: Option<String>,
    neighbors: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct PairsManifest {
    scene: String,
    k: usize,
    seed: u64,
    pairs: Vec<PairEntry>,
}

enum Job {
    Nvs { frame: usize, neighbors: Vec<usize> },
    Insertion { asset_idx: usize, frame: usize },
}

fn plan_jobs(scene: &Scene, opts: &BuildPairsOpts) -> Result<Vec<Job>> {
    let n_frames = scene.frames.len();
    let mut jobs = Vec::new();

    if matches!(opts.kind, PairKind::Nvs | PairKind::Both) {
        if n_frames < 2 {
            return Err(Error::invalid(
                "scene",
                "NVS pairs need at least two frames for a neighbor window",
            ));
        }
        for t in 0..n_frames {
            let window = (t.saturating_sub(NEIGHBOR_WINDOW)
                ..=(t + NEIGHBOR_WINDOW).min(n_frames - 1))
                .filter(|&i| i != t)
                .count();
            if opts.k > window {
                log::warn!(
                    "frame {t}: k = {} exceeds the {window}-frame window, clamping",
                    opts.k
                );
            }
            let neighbors =
                sample_neighbors(t, n_frames, opts.k, derive_seed(opts.seed, &[t as u64]))?;
            jobs.push(Job::Nvs { frame: t, neighbors });
        }
    }

    if matches!(opts.kind, PairKind::Insertion | PairKind::Both) {
        for (asset_idx, sa) in scene.assets.iter().enumerate() {
            let (cl, cw, ch) = sa.asset.canonical_box.dims;
            for (frame, placement) in &sa.placements {
                // Stage-one asset filtering: reject placements whose box
                // deviates from the reconstructed asset dimensions.
                let (pl, pw, ph) = placement.dims;
                if filter_asset_bbox([cl, cw, ch], [pl, pw, ph], opts.filter_tol)?
                    == FilterDecision::Reject
                {
                    log::warn!(
                        "asset '{}' at frame {frame}: dims ({cl:.2}, {cw:.2}, {ch:.2}) deviate \
                         from placement ({pl:.2}, {pw:.2}, {ph:.2}) beyond {:.0}%, skipping",
                        sa.id,
                        opts.filter_tol * 100.0
                    );
                    continue;
                }
                jobs.push(Job::Insertion {
                    asset_idx,
                    frame: *frame,
                });
            }
        }
    }
    Ok(jobs)
}

pub fn cmd_build_pairs(opts: &BuildPairsOpts) -> Result<usize> {
    let convention = opts
        .gs_reference_convention
        .then_some(AssetConvention::Reference);
    let scene = load_scene_with(&opts.scene, convention)?;
    let _lock = OutputLock::acquire(&opts.out)?;

    let jobs = plan_jobs(&scene, opts)?;
    // Jobs own disjoint pair_* directories, so they can build and write
    // in parallel; the manifest keeps the planned order.
    let entries: Vec<PairEntry> = jobs
        .par_iter()
        .enumerate()
        .map(|(index, job)| {
            let dir_name = format!("pair_{index:04}");
            let entry = match job {
                Job::Nvs { frame, neighbors } => {
                    let pair = build_nvs_pair(&scene, *frame, neighbors)?;
                    save_pair(opts.out.join(&dir_name), &pair)?;
                    PairEntry {
                        dir: dir_name,
                        kind: "nvs",
                        frame: *frame,
                        asset: None,
                        neighbors: neighbors.clone(),
                    }
                }
                Job::Insertion { asset_idx, frame } => {
                    let pair = build_insertion_pair(&scene, *asset_idx, *frame)?;
                    save_pair(opts.out.join(&dir_name), &pair)?;
                    PairEntry {
                        dir: dir_name,
                        kind: "insertion",
                        frame: *frame,
                        asset: Some(scene.assets[*asset_idx].id.clone()),
                        neighbors: vec![],
                    }
                }
            };
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = PairsManifest {
        scene: opts.scene.display().to_string(),
        k: opts.k,
        seed: opts.seed,
        pairs: entries,
    };
    let path = opts.out.join("pairs.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::malformed(&path, e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    log::info!("wrote {} pairs to {}", manifest.pairs.len(), opts.out.display());
    Ok(manifest.pairs.len())
}
