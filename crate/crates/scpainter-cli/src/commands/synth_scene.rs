use std::path::PathBuf;

use clap::Args;

use scpainter_core::dataset::manifest::save_scene;
use scpainter_core::dataset::synth::{synth_scene, SynthSceneSpec};
use scpainter_core::{Error, Result};

use crate::lock::OutputLock;

/// Generate a procedural test scene and write it in the scene.json
/// layout.
#[derive(Debug, Args)]
pub struct SynthSceneOpts {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of frames along the camera path.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Focal length in pixels; defaults to the image width.
    #[arg(long)]
    pub focal: Option<f64>,
    /// Skip the insertable splat asset.
    #[arg(long, default_value_t = false)]
    pub no_asset: bool,
}

pub fn cmd_synth_scene(opts: &SynthSceneOpts) -> Result<PathBuf> {
    let mut spec = SynthSceneSpec::canonical();
    if let Some(f) = opts.frames {
        spec.n_frames = f;
    }
    if let Some(w) = opts.width {
        spec.width = w;
        spec.focal = w as f64;
    }
    if let Some(h) = opts.height {
        spec.height = h;
    }
    if let Some(f) = opts.focal {
        spec.focal = f;
    }
    if opts.no_asset {
        spec.with_asset = false;
    }
    if !spec.width.is_multiple_of(8) || !spec.height.is_multiple_of(8) {
        return Err(Error::invalid(
            "image size",
            format!("{}x{} must be divisible by 8", spec.width, spec.height),
        ));
    }
    let _lock = OutputLock::acquire(&opts.out)?;
    let scene = synth_scene(&spec, opts.seed)?;
    let manifest = save_scene(&opts.out, &scene)?;
    log::info!("wrote {} frames to {}", scene.frames.len(), manifest.display());
    Ok(manifest)
}
