//! Tile-based front-to-back alpha compositing of projected Gaussians.
//!
//! Tiling is purely an acceleration: whether a Gaussian contributes to a
//! pixel depends only on its 3-sigma bounding box containing the pixel
//! center, and per-pixel order is the global (depth, index) sort, so the
//! output is bit-identical for any tile size and any tile scheduling.

use nalgebra::{Matrix2, Vector2};
use ndarray::{Array2, Array3};
use rayon::prelude::*;

use super::{project_gaussian, sh, Gaussian3D, ProjectedGaussian, ALPHA_CLAMP, TRANSMITTANCE_CUTOFF};
use crate::geometry::{CameraIntrinsics, RigidPose};

pub const DEFAULT_TILE_SIZE: usize = 16;

/// Alpha-composited splat image.
#[derive(Debug, Clone)]
pub struct SplatRender {
    /// `(3, H, W)` premultiplied composite color.
    pub rgb: Array3<f64>,
    /// `(H, W)` accumulated opacity in `[0, 1]`.
    pub alpha: Array2<f64>,
    /// `(H, W)` alpha-weighted mean splat depth; +inf where alpha is 0.
    pub depth: Array2<f64>,
}

struct PreparedGaussian {
    index: usize,
    mean2d: Vector2<f64>,
    inv_cov: Matrix2<f64>,
    depth: f64,
    opacity: f64,
    color: [f64; 3],
    radius: Vector2<f64>,
}

impl PreparedGaussian {
    fn covers_pixel(&self, u: usize, v: usize) -> bool {
        let du = (u as f64 + 0.5 - self.mean2d.x).abs();
        let dv = (v as f64 + 0.5 - self.mean2d.y).abs();
        du <= self.radius.x && dv <= self.radius.y
    }

    /// `opacity * exp(-0.5 * d^T cov^-1 d)` at a pixel center, clamped.
    fn alpha_at(&self, u: usize, v: usize) -> f64 {
        let d = Vector2::new(u as f64 + 0.5 - self.mean2d.x, v as f64 + 0.5 - self.mean2d.y);
        let m = (d.transpose() * self.inv_cov * d)[(0, 0)];
        (self.opacity * (-0.5 * m).exp()).min(ALPHA_CLAMP)
    }
}

fn prepare(
    gaussians: &[Gaussian3D],
    intrinsics: &CameraIntrinsics,
    pose: &RigidPose,
) -> Vec<PreparedGaussian> {
    let mut prepared: Vec<PreparedGaussian> = gaussians
        .par_iter()
        .enumerate()
        .filter_map(|(index, g)| {
            let p: ProjectedGaussian = project_gaussian(g, intrinsics, pose)?;
            let inv_cov = p.cov2d.try_inverse()?; // floor keeps this well conditioned
            let color = sh::eval_color(&g.sh, &p.view_dir);
            Some(PreparedGaussian {
                index,
                mean2d: p.mean2d,
                inv_cov,
                depth: p.depth,
                opacity: g.opacity,
                color,
                radius: p.radius,
            })
        })
        .collect();
    // Global front-to-back order; index breaks depth ties deterministically.
    prepared.sort_by(|a, b| {
        a.depth
            .partial_cmp(&b.depth)
            .unwrap()
            .then(a.index.cmp(&b.index))
    });
    prepared
}

/// Rasterizes world-frame Gaussians into the camera. Per pixel, the
/// contributing splats (3-sigma bounding-box test) are composited
/// front-to-back: `C = sum_i c_i a_i prod_{j<i} (1 - a_j)` with
/// `a_i = opacity_i * exp(-0.5 d^T cov2d^-1 d)` clamped to 0.99, stopping
/// once transmittance falls below 1e-4.
pub fn rasterize(
    gaussians: &[Gaussian3D],
    intrinsics: &CameraIntrinsics,
    pose: &RigidPose,
    tile_size: usize,
) -> SplatRender {
    let (h, w) = (intrinsics.height, intrinsics.width);
    let tile = tile_size.max(1);
    let prepared = prepare(gaussians, intrinsics, pose);

    let tiles_x = w.div_ceil(tile);
    let tiles_y = h.div_ceil(tile);

    // Candidate lists per tile, preserving the global sort order.
    let mut tile_lists: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    for (slot, g) in prepared.iter().enumerate() {
        let x0 = ((g.mean2d.x - g.radius.x).floor().max(0.0) as usize).min(w.saturating_sub(1)) / tile;
        let y0 = ((g.mean2d.y - g.radius.y).floor().max(0.0) as usize).min(h.saturating_sub(1)) / tile;
        let x1 = ((g.mean2d.x + g.radius.x).ceil().max(0.0) as usize).min(w.saturating_sub(1)) / tile;
        let y1 = ((g.mean2d.y + g.radius.y).ceil().max(0.0) as usize).min(h.saturating_sub(1)) / tile;
        if g.mean2d.x + g.radius.x < 0.0
            || g.mean2d.y + g.radius.y < 0.0
            || g.mean2d.x - g.radius.x >= w as f64
            || g.mean2d.y - g.radius.y >= h as f64
        {
            continue;
        }
        for ty in y0..=y1 {
            for tx in x0..=x1 {
                tile_lists[ty * tiles_x + tx].push(slot as u32);
            }
        }
    }

    struct TileOut {
        tx: usize,
        ty: usize,
        rgb: Vec<[f64; 3]>,
        alpha: Vec<f64>,
        depth: Vec<f64>,
    }

    let outputs: Vec<TileOut> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|t| {
            let (ty, tx) = (t / tiles_x, t % tiles_x);
            let (px0, py0) = (tx * tile, ty * tile);
            let (tw, th) = ((w - px0).min(tile), (h - py0).min(tile));
            let mut out = TileOut {
                tx,
                ty,
                rgb: vec![[0.0; 3]; tw * th],
                alpha: vec![0.0; tw * th],
                depth: vec![f64::INFINITY; tw * th],
            };
            let list = &tile_lists[t];
            for dy in 0..th {
                for dx in 0..tw {
                    let (u, v) = (px0 + dx, py0 + dy);
                    let mut transmittance = 1.0f64;
                    let mut rgb = [0.0f64; 3];
                    let mut alpha_sum = 0.0f64;
                    let mut depth_acc = 0.0f64;
                    for &slot in list {
                        let g = &prepared[slot as usize];
                        if !g.covers_pixel(u, v) {
                            continue;
                        }
                        let a = g.alpha_at(u, v);
                        let weight = a * transmittance;
                        for (slot, color) in rgb.iter_mut().zip(&g.color) {
                            *slot += color * weight;
                        }
                        alpha_sum += weight;
                        depth_acc += g.depth * weight;
                        transmittance *= 1.0 - a;
                        if transmittance < TRANSMITTANCE_CUTOFF {
                            break;
                        }
                    }
                    let i = dy * tw + dx;
                    out.rgb[i] = rgb;
                    out.alpha[i] = alpha_sum;
                    out.depth[i] = if alpha_sum > 0.0 {
                        depth_acc / alpha_sum
                    } else {
                        f64::INFINITY
                    };
                }
            }
            out
        })
        .collect();

    let mut rgb = Array3::<f64>::zeros((3, h, w));
    let mut alpha = Array2::<f64>::zeros((h, w));
    let mut depth = Array2::<f64>::from_elem((h, w), f64::INFINITY);
    for t in outputs {
        let (px0, py0) = (t.tx * tile, t.ty * tile);
        let tw = (w - px0).min(tile);
        let th = (h - py0).min(tile);
        for dy in 0..th {
            for dx in 0..tw {
                let i = dy * tw + dx;
                let (v, u) = (py0 + dy, px0 + dx);
                for c in 0..3 {
                    rgb[(c, v, u)] = t.rgb[i][c];
                }
                alpha[(v, u)] = t.alpha[i];
                depth[(v, u)] = t.depth[i];
            }
        }
    }
    SplatRender { rgb, alpha, depth }
}
