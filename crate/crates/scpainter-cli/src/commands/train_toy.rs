use std::path::PathBuf;

use clap::Args;

use scpainter_core::dataset::pairio::{list_pair_dirs, load_pair};
use scpainter_core::diffusion::checkpoint::{save_checkpoint, save_loss_csv};
use scpainter_core::diffusion::{train, TrainConfig};
use scpainter_core::{Error, Result};

use crate::lock::OutputLock;

/// Train the toy denoiser on a directory of pairs; writes `model.ckpt`
/// and `loss.csv`.
#[derive(Debug, Args)]
pub struct TrainToyOpts {
    /// Directory containing pair_* subdirectories.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-condition dropout probability.
    #[arg(long, default_value_t = 0.15)]
    pub dropout: f64,
    /// Tie the rendering and embedding dropout to a single draw.
    #[arg(long, default_value_t = false)]
    pub joint_dropout: bool,
    #[arg(long, default_value_t = 5e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 2)]
    pub batch: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_train_toy(opts: &TrainToyOpts) -> Result<PathBuf> {
    let dirs = list_pair_dirs(&opts.pairs)?;
    if dirs.is_empty() {
        return Err(Error::invalid(
            "pairs directory",
            format!("no pair_* directories under {}", opts.pairs.display()),
        ));
    }
    let pairs = dirs.iter().map(load_pair).collect::<Result<Vec<_>>>()?;
    let cfg = TrainConfig {
        iterations: opts.iters,
        batch_size: opts.batch,
        learning_rate: opts.lr,
        dropout: opts.dropout,
        joint_dropout: opts.joint_dropout,
        seed: opts.seed,
        ..TrainConfig::default()
    };

    let _lock = OutputLock::acquire(&opts.out)?;
    let out = train(&pairs, &cfg)?;
    let ckpt_path = opts.out.join("model.ckpt");
    save_checkpoint(&ckpt_path, &out.params, opts.seed, opts.iters)?;
    save_loss_csv(opts.out.join("loss.csv"), &out.losses)?;
    let first = out.losses.first().copied().unwrap_or(f64::NAN);
    let last = out.losses.last().copied().unwrap_or(f64::NAN);
    log::info!(
        "trained {} iterations on {} pairs (loss {first:.4} -> {last:.4}); checkpoint at {}",
        opts.iters,
        pairs.len(),
        ckpt_path.display()
    );
    Ok(ckpt_path)
}
