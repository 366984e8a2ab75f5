//! Desk-scale latent diffusion harness.
//!
//! The pieces mirror a video latent diffusion trainer at toy size: a
//! variance-preserving cosine noise schedule, a seeded block-linear
//! stand-in for the VAE ([`codec::StandinCodec`]), a small convolutional
//! denoiser with hand-derived analytic gradients ([`denoiser`]), the
//! noise-prediction training loop ([`mod@train`]), and a deterministic
//! DDIM-style sampler ([`sampler`]). The prediction target is always the
//! injected noise.

pub mod checkpoint;
pub mod codec;
pub mod denoiser;
pub mod sampler;
pub mod train;

use ndarray::Array1;
use rand::Rng;

use crate::conditioning::{
    assemble_encoder_input, composite_masks, downsample_mask, mask_latent, ConditioningBundle,
    LatentTensor,
};
use crate::{Error, Result};

pub use codec::{StandinCodec, LATENT_CHANNELS};
pub use denoiser::{Denoiser, DenoiserParams};
pub use sampler::{sample, sample_latent, SAMPLER_TAU_MAX};
pub use train::{train, TrainOutput};

/// Variance-preserving cosine schedule: `alpha = cos(pi tau / 2)`,
/// `sigma = sin(pi tau / 2)`, so `alpha^2 + sigma^2 = 1`, `alpha(0) = 1`,
/// `sigma(0) = 0`, alpha strictly decreasing and sigma strictly
/// increasing on `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoiseSchedule;

impl NoiseSchedule {
    pub fn alpha(&self, tau: f64) -> f64 {
        (std::f64::consts::FRAC_PI_2 * tau).cos()
    }

    pub fn sigma(&self, tau: f64) -> f64 {
        (std::f64::consts::FRAC_PI_2 * tau).sin()
    }
}

/// Training hyperparameters. Defaults match the toy training harness:
/// condition dropout 0.15, diffusion time uniform on `[0.002, 1]`.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Per-condition dropout probability.
    pub dropout: f64,
    /// Drop the rendering and the embedding together instead of with two
    /// independent draws.
    pub joint_dropout: bool,
    pub tau_min: f64,
    pub tau_max: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 500,
            batch_size: 2,
            learning_rate: 5e-3,
            dropout: 0.15,
            joint_dropout: false,
            tau_min: 0.002,
            tau_max: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.batch_size == 0 {
            return Err(Error::invalid("train config", "iterations and batch size must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err(Error::invalid("train config", format!("dropout {} outside [0,1]", self.dropout)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::invalid("train config", "bad learning rate"));
        }
        if !(0.0 <= self.tau_min && self.tau_min < self.tau_max && self.tau_max <= 1.0) {
            return Err(Error::invalid("train config", "tau range must satisfy 0 <= min < max <= 1"));
        }
        Ok(())
    }
}

/// `x_tau = alpha(tau) * x0 + sigma(tau) * eps`, exactly.
pub fn add_noise(x0: &LatentTensor, tau: f64, eps: &LatentTensor) -> Result<LatentTensor> {
    if x0.dim() != eps.dim() {
        return Err(Error::shape(format!("{:?}", x0.dim()), format!("{:?}", eps.dim())));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid("tau", format!("{tau} outside [0,1]")));
    }
    let schedule = NoiseSchedule;
    let (a, s) = (schedule.alpha(tau), schedule.sigma(tau));
    LatentTensor::new(&x0.data * a + &eps.data * s)
}

/// Mean squared error over all elements. The target is the injected
/// noise (epsilon prediction).
pub fn diffusion_loss(pred: &LatentTensor, target: &LatentTensor) -> Result<f64> {
    if pred.dim() != target.dim() {
        return Err(Error::shape(format!("{:?}", pred.dim()), format!("{:?}", target.dim())));
    }
    let n = pred.data.len() as f64;
    let sum: f64 = pred
        .data
        .iter()
        .zip(target.data.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / n)
}

/// Randomly zeroes the rendered-conditioning channels and the first-frame
/// embedding, each with probability `p`. Independent draws by default;
/// `joint` ties both to a single draw. The rendering draw always comes
/// first, so a fixed RNG state gives a fixed outcome.
pub fn drop_condition(
    cond: &LatentTensor,
    embed: &Array1<f64>,
    p: f64,
    joint: bool,
    rng: &mut impl Rng,
) -> Result<(LatentTensor, Array1<f64>)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("dropout", format!("{p} outside [0,1]")));
    }
    let drop_render = rng.random::<f64>() < p;
    let drop_embed = if joint { drop_render } else { rng.random::<f64>() < p };
    let cond_out = if drop_render {
        LatentTensor::new(ndarray::Array4::zeros(cond.dim()))?
    } else {
        cond.clone()
    };
    let embed_out = if drop_embed {
        Array1::zeros(embed.len())
    } else {
        embed.clone()
    };
    Ok((cond_out, embed_out))
}

/// The full conditioning path from a rendered bundle to the masked latent
/// fed into the denoiser: concatenate `I` with the continuous asset mask,
/// encode, composite the binary asset mask into coverage, downsample to
/// latent resolution, and zero out unobserved cells.
pub fn conditioning_latent(codec: &StandinCodec, bundle: &ConditioningBundle) -> Result<LatentTensor> {
    let enc_in = assemble_encoder_input(&bundle.i, &bundle.ma)?;
    let z = codec.encode(&enc_in)?;
    let composited = composite_masks(&bundle.coverage, &bundle.ma_binary)?;
    let mask_lat = downsample_mask(&composited)?;
    mask_latent(&z, &mask_lat)
}
