use std::path::PathBuf;

use clap::Args;
use ndarray::{s, Array4};
use rayon::prelude::*;

use scpainter_core::conditioning::{render_joint, save_bundle, ConditioningBundle, Trajectory};
use scpainter_core::dataset::manifest::load_scene_with;
use scpainter_core::geometry::unproject;
use scpainter_core::ply::AssetConvention;
use scpainter_core::Result;

use crate::commands::FrameRange;
use crate::lock::OutputLock;

/// Render the scene into a laterally shifted copy of the recorded
/// trajectory and write the conditioning bundle.
#[derive(Debug, Args)]
pub struct RenderTrajOpts {
    /// Path to scene.json.
    #[arg(long)]
    pub scene: PathBuf,
    /// Lateral shift in meters along each pose's right axis; sign picks
    /// the side.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift: f64,
    /// Frame range `a..b` or a single index; defaults to all frames.
    #[arg(long)]
    pub frames: Option<FrameRange>,
    /// Treat asset PLYs as reference-convention exports (log-scale,
    /// logit-opacity).
    #[arg(long = "gs-reference-convention", default_value_t = false)]
    pub gs_reference_convention: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_render_traj(opts: &RenderTrajOpts) -> Result<ConditioningBundle> {
    if !opts.shift.is_finite() {
        return Err(scpainter_core::Error::invalid("shift", "must be finite"));
    }
    let convention = opts
        .gs_reference_convention
        .then_some(AssetConvention::Reference);
    let scene = load_scene_with(&opts.scene, convention)?;
    let range = opts
        .frames
        .unwrap_or_else(|| FrameRange::full(scene.frames.len()));
    let indices = range.indices(scene.frames.len())?;
    if indices.is_empty() {
        return Err(scpainter_core::Error::invalid("frame range", "no frames selected"));
    }
    let _lock = OutputLock::acquire(&opts.out)?;

    // Each observed viewpoint contributes its own points, rendered into
    // its laterally shifted camera; the per-frame results stack into one
    // trajectory bundle. Frames are independent jobs.
    let rendered: Vec<_> = indices
        .par_iter()
        .map(|&t| {
            let frame = &scene.frames[t];
            let mut pose = frame.pose;
            pose.translation += pose.right_axis() * opts.shift;
            let cloud = unproject(frame);
            let splats = scene.aligned_splats_at(t)?;
            let traj = Trajectory::new(vec![(frame.intrinsics, pose)])?;
            Ok((render_joint(&cloud, &splats, &traj)?, (frame.intrinsics, pose)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (per_frame, cameras): (Vec<_>, Vec<_>) = rendered.into_iter().unzip();

    let (h, w) = (per_frame[0].i.dim().2, per_frame[0].i.dim().3);
    let t_len = per_frame.len();
    let mut i = Array4::<f32>::zeros((t_len, 3, h, w));
    let mut coverage = Array4::<f32>::zeros((t_len, 1, h, w));
    let mut ma = Array4::<f32>::zeros((t_len, 1, h, w));
    let mut ma_binary = Array4::<f32>::zeros((t_len, 1, h, w));
    for (t, b) in per_frame.iter().enumerate() {
        i.slice_mut(s![t, .., .., ..]).assign(&b.i.slice(s![0, .., .., ..]));
        coverage
            .slice_mut(s![t, .., .., ..])
            .assign(&b.coverage.slice(s![0, .., .., ..]));
        ma.slice_mut(s![t, .., .., ..]).assign(&b.ma.slice(s![0, .., .., ..]));
        ma_binary
            .slice_mut(s![t, .., .., ..])
            .assign(&b.ma_binary.slice(s![0, .., .., ..]));
    }
    let bundle = ConditioningBundle {
        i,
        coverage,
        ma,
        ma_binary,
        cameras: Trajectory::new(cameras)?,
    };
    bundle.validate()?;
    save_bundle(&opts.out, &bundle)?;
    log::info!(
        "rendered {} frames at shift {} m into {}",
        t_len,
        opts.shift,
        opts.out.display()
    );
    Ok(bundle)
}
