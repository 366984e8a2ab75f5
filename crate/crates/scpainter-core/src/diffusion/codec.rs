//! Stand-in block-linear encoder/decoder.
//!
//! Each 8x8 spatial block of the 4-channel encoder input (RGB + asset
//! mask) maps through one fixed 8x256 matrix with orthonormal rows to 8
//! latent channels. The first four rows are the per-channel block means,
//! so any block-constant input lies in the row space and round-trips
//! exactly; the remaining rows are a seeded random orthonormal complement.
//! Decoding applies the transpose (the pseudo-inverse for orthonormal
//! rows) and keeps the RGB part, which makes `decode(encode(x))` the
//! orthogonal projection onto the row space.

use ndarray::{Array2, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::conditioning::{LatentTensor, LATENT_FACTOR};
use crate::{Error, Result};

/// Latent channels produced per block.
pub const LATENT_CHANNELS: usize = 8;
/// Encoder input channels: RGB plus the continuous asset mask.
pub const ENCODER_CHANNELS: usize = 4;
/// Flattened block length.
const BLOCK: usize = LATENT_FACTOR * LATENT_FACTOR;
const INPUT_LEN: usize = ENCODER_CHANNELS * BLOCK;
const CODEC_SEED: u64 = 0x0c0d_ec5e;

#[derive(Debug, Clone)]
pub struct StandinCodec {
    /// `(LATENT_CHANNELS, INPUT_LEN)`, orthonormal rows.
    matrix: Array2<f64>,
}

impl Default for StandinCodec {
    fn default() -> Self {
        StandinCodec::new()
    }
}

impl StandinCodec {
    pub fn new() -> Self {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(LATENT_CHANNELS);
        // Rows 0..4: per-channel block means, normalized (disjoint
        // supports, so already orthonormal).
        for ch in 0..ENCODER_CHANNELS {
            let mut row = vec![0.0f64; INPUT_LEN];
            let norm = (BLOCK as f64).sqrt();
            for i in 0..BLOCK {
                row[ch * BLOCK + i] = 1.0 / norm;
            }
            rows.push(row);
        }
        // Remaining rows: random, Gram-Schmidt against everything before.
        let mut rng = ChaCha8Rng::seed_from_u64(CODEC_SEED);
        while rows.len() < LATENT_CHANNELS {
            let mut v: Vec<f64> = (0..INPUT_LEN).map(|_| rng.sample(StandardNormal)).collect();
            for r in &rows {
                let dot: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ri) in v.iter_mut().zip(r) {
                    *vi -= dot * ri;
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue; // essentially impossible; redraw
            }
            for vi in &mut v {
                *vi /= norm;
            }
            rows.push(v);
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        StandinCodec {
            matrix: Array2::from_shape_vec((LATENT_CHANNELS, INPUT_LEN), flat)
                .expect("row construction matches shape"),
        }
    }

    /// The `(8, 256)` block map; exposed for matrix-level verification.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// `(T, 4, H, W)` -> `(T, 8, H/8, W/8)`.
    pub fn encode(&self, x: &Array4<f32>) -> Result<LatentTensor> {
        let (t_len, c, h, w) = x.dim();
        if c != ENCODER_CHANNELS {
            return Err(Error::shape("(T, 4, H, W)", format!("{:?}", x.dim())));
        }
        if h % LATENT_FACTOR != 0 || w % LATENT_FACTOR != 0 {
            return Err(Error::invalid("encode", format!("{h}x{w} not divisible by {LATENT_FACTOR}")));
        }
        let (lh, lw) = (h / LATENT_FACTOR, w / LATENT_FACTOR);
        let mut z = Array4::<f64>::zeros((t_len, LATENT_CHANNELS, lh, lw));
        let mut block = [0.0f64; INPUT_LEN];
        for t in 0..t_len {
            for bv in 0..lh {
                for bu in 0..lw {
                    self.gather_block(x, t, bv, bu, &mut block);
                    for lc in 0..LATENT_CHANNELS {
                        let row = self.matrix.row(lc);
                        let mut acc = 0.0;
                        for i in 0..INPUT_LEN {
                            acc += row[i] * block[i];
                        }
                        z[(t, lc, bv, bu)] = acc;
                    }
                }
            }
        }
        LatentTensor::new(z)
    }

    /// `(T, 8, h, w)` -> `(T, 3, 8h, 8w)`: transpose map, RGB part only.
    pub fn decode(&self, z: &LatentTensor) -> Result<Array4<f32>> {
        let (t_len, c, lh, lw) = z.dim();
        if c != LATENT_CHANNELS {
            return Err(Error::shape(
                format!("(T, {LATENT_CHANNELS}, h, w)"),
                format!("{:?}", z.dim()),
            ));
        }
        let (h, w) = (lh * LATENT_FACTOR, lw * LATENT_FACTOR);
        let mut out = Array4::<f32>::zeros((t_len, 3, h, w));
        for t in 0..t_len {
            for bv in 0..lh {
                for bu in 0..lw {
                    for i in 0..3 * BLOCK {
                        // x_hat = A^T z, taking only the RGB coordinates.
                        let mut acc = 0.0;
                        for lc in 0..LATENT_CHANNELS {
                            acc += self.matrix[(lc, i)] * z.data[(t, lc, bv, bu)];
                        }
                        let ch = i / BLOCK;
                        let within = i % BLOCK;
                        let (dy, dx) = (within / LATENT_FACTOR, within % LATENT_FACTOR);
                        out[(t, ch, bv * LATENT_FACTOR + dy, bu * LATENT_FACTOR + dx)] = acc as f32;
                    }
                }
            }
        }
        Ok(out)
    }

    fn gather_block(&self, x: &Array4<f32>, t: usize, bv: usize, bu: usize, block: &mut [f64; INPUT_LEN]) {
        for ch in 0..ENCODER_CHANNELS {
            for dy in 0..LATENT_FACTOR {
                for dx in 0..LATENT_FACTOR {
                    block[ch * BLOCK + dy * LATENT_FACTOR + dx] =
                        x[(t, ch, bv * LATENT_FACTOR + dy, bu * LATENT_FACTOR + dx)] as f64;
                }
            }
        }
    }

    /// Encodes a 3-channel target video by appending a zero fourth
    /// channel; targets carry no asset mask.
    pub fn encode_rgb(&self, rgb: &Array4<f32>) -> Result<LatentTensor> {
        let (t_len, c, h, w) = rgb.dim();
        if c != 3 {
            return Err(Error::shape("(T, 3, H, W)", format!("{:?}", rgb.dim())));
        }
        let mut padded = Array4::<f32>::zeros((t_len, ENCODER_CHANNELS, h, w));
        padded
            .slice_mut(ndarray::s![.., 0..3, .., ..])
            .assign(rgb);
        self.encode(&padded)
    }
}
