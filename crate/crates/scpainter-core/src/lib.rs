//! Geometric conditioning pipeline for joint 3D asset insertion and novel
//! view synthesis.
//!
//! The library covers the full path from observed frames to diffusion-ready
//! conditioning tensors:
//!
//! - [`geometry`]: pinhole cameras, rigid poses, depth unprojection to
//!   colorized point clouds, and z-buffered point projection.
//! - [`splat`]: 3D Gaussian primitives, spherical-harmonic color, EWA
//!   projection, and a tile-based alpha-compositing rasterizer.
//! - [`conditioning`]: joint point+splat rendering into camera trajectories
//!   and assembly of the conditioning tensors (rendered video, coverage
//!   mask, asset mask, masked latents).
//! - [`dataset`]: training-pair construction (neighbor-frame projection and
//!   asset removal/replacement), bbox-based asset filtering, and a
//!   synthetic-scene generator used as a test oracle substrate.
//! - [`diffusion`]: a desk-scale latent diffusion harness with a
//!   variance-preserving noise schedule, a stand-in block-linear
//!   encoder/decoder, a tiny convolutional denoiser with analytic
//!   gradients, and a deterministic DDIM-style sampler.
//! - [`mod@reference`]: brute-force reference implementations used to verify
//!   the optimized render paths.
//!
//! Masks follow the coverage polarity throughout: 1 marks pixels that
//! received projected content. File outputs record this under a
//! `"polarity"` field.

pub mod conditioning;
pub mod dataset;
pub mod diffusion;
mod error;
pub mod geometry;
pub mod imageio;
pub mod ply;
pub mod reference;
pub mod splat;
pub mod tensor;

pub use error::{Error, Result};

/// Points closer than this camera-space depth (meters) are discarded by
/// every projection path. Avoids projective blow-up near z = 0.
pub const NEAR_CLIP: f64 = 0.01;
