use std::path::PathBuf;

use clap::Args;

use scpainter_core::dataset::manifest::load_scene;
use scpainter_core::geometry::unproject;
use scpainter_core::ply::write_cloud;
use scpainter_core::Result;

use crate::commands::FrameRange;
use crate::lock::OutputLock;

/// Unproject depth frames to colorized point clouds, one PLY per frame.
#[derive(Debug, Args)]
pub struct UnprojectOpts {
    /// Path to scene.json.
    #[arg(long)]
    pub scene: PathBuf,
    /// Frame range `a..b` or a single index; defaults to all frames.
    #[arg(long)]
    pub frames: Option<FrameRange>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_unproject(opts: &UnprojectOpts) -> Result<Vec<PathBuf>> {
    let scene = load_scene(&opts.scene)?;
    let range = opts.frames.unwrap_or_else(|| FrameRange::full(scene.frames.len()));
    let indices = range.indices(scene.frames.len())?;
    let _lock = OutputLock::acquire(&opts.out)?;
    let mut written = Vec::with_capacity(indices.len());
    for t in indices {
        let mut cloud = unproject(&scene.frames[t]);
        cloud.source_frame = Some(t);
        let path = opts.out.join(format!("points_{t:04}.ply"));
        write_cloud(&path, &cloud)?;
        log::info!("frame {t}: {} points -> {}", cloud.len(), path.display());
        written.push(path);
    }
    Ok(written)
}
