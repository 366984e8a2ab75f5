use std::path::PathBuf;

use clap::Args;
use ndarray::s;

use scpainter_core::conditioning::load_bundle;
use scpainter_core::dataset::embed_first_frame;
use scpainter_core::diffusion::checkpoint::load_checkpoint;
use scpainter_core::diffusion::{sample, StandinCodec};
use scpainter_core::{imageio, Error, Result};

use crate::lock::OutputLock;

/// Sample a video from a checkpoint conditioned on a rendered bundle;
/// writes `frame_%04d.png`.
#[derive(Debug, Args)]
pub struct SampleOpts {
    /// Checkpoint file from train-toy.
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Conditioning bundle directory from render-traj.
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_sample(opts: &SampleOpts) -> Result<Vec<PathBuf>> {
    if opts.steps == 0 {
        return Err(Error::invalid("steps", "must be >= 1"));
    }
    let (params, ..) = load_checkpoint(&opts.ckpt)?;
    let bundle = load_bundle(&opts.bundle)?;
    // At inference there is no ground-truth first frame; the first
    // rendered conditioning frame stands in for it.
    let first = bundle.i.slice(s![0, .., .., ..]).to_owned();
    let embed = embed_first_frame(&first);
    let codec = StandinCodec::new();

    let _lock = OutputLock::acquire(&opts.out)?;
    let video = sample(&params, &codec, &bundle, &embed, opts.steps, opts.seed)?;
    let (t_len, ..) = video.dim();
    let mut written = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let frame = video.slice(s![t, .., .., ..]).to_owned();
        let path = opts.out.join(format!("frame_{t:04}.png"));
        imageio::save_rgb(&path, &frame)?;
        written.push(path);
    }
    log::info!(
        "sampled {} frames with {} steps into {}",
        t_len,
        opts.steps,
        opts.out.display()
    );
    Ok(written)
}
