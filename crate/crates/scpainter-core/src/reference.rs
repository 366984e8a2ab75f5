//! Plain brute-force renderers used to verify the optimized paths.
//!
//! These stay deliberately simple: no tiles, no candidate lists, a full
//! per-pixel scan and sort. They share the per-splat projection math with
//! the production path (that math has its own analytic oracles) but
//! reimplement candidacy, ordering, and compositing from the definitions.
//! Production code must never call into this module.

use nalgebra::{Matrix2, Vector2};
use ndarray::{Array2, Array3};

use crate::geometry::{CameraIntrinsics, ColorPointCloud, RigidPose};
use crate::splat::{
    project_gaussian, sh, Gaussian3D, SplatRender, ALPHA_CLAMP, TRANSMITTANCE_CUTOFF,
};
use crate::NEAR_CLIP;

/// Per-pixel full-sort compositor over all Gaussians.
pub fn brute_force_rasterize(
    gaussians: &[Gaussian3D],
    intrinsics: &CameraIntrinsics,
    pose: &RigidPose,
) -> SplatRender {
    struct Splat {
        index: usize,
        mean: Vector2<f64>,
        inv_cov: Matrix2<f64>,
        depth: f64,
        opacity: f64,
        color: [f64; 3],
        radius: Vector2<f64>,
    }

    let mut splats = Vec::new();
    for (index, g) in gaussians.iter().enumerate() {
        if let Some(p) = project_gaussian(g, intrinsics, pose) {
            splats.push(Splat {
                index,
                mean: p.mean2d,
                inv_cov: p.cov2d.try_inverse().expect("floored covariance is invertible"),
                depth: p.depth,
                opacity: g.opacity,
                color: sh::eval_color(&g.sh, &p.view_dir),
                radius: p.radius,
            });
        }
    }

    let (h, w) = (intrinsics.height, intrinsics.width);
    let mut rgb = Array3::<f64>::zeros((3, h, w));
    let mut alpha = Array2::<f64>::zeros((h, w));
    let mut depth = Array2::<f64>::from_elem((h, w), f64::INFINITY);

    for v in 0..h {
        for u in 0..w {
            let (px, py) = (u as f64 + 0.5, v as f64 + 0.5);
            // Gather every splat whose 3-sigma box contains this pixel
            // center, then sort the whole list for this pixel alone.
            let mut contributing: Vec<&Splat> = splats
                .iter()
                .filter(|s| {
                    (px - s.mean.x).abs() <= s.radius.x && (py - s.mean.y).abs() <= s.radius.y
                })
                .collect();
            contributing.sort_by(|a, b| {
                a.depth
                    .partial_cmp(&b.depth)
                    .unwrap()
                    .then(a.index.cmp(&b.index))
            });

            let mut transmittance = 1.0f64;
            let mut acc = [0.0f64; 3];
            let mut alpha_sum = 0.0f64;
            let mut depth_acc = 0.0f64;
            for s in contributing {
                let d = Vector2::new(px - s.mean.x, py - s.mean.y);
                let m = (d.transpose() * s.inv_cov * d)[(0, 0)];
                let a = (s.opacity * (-0.5 * m).exp()).min(ALPHA_CLAMP);
                let weight = a * transmittance;
                for (slot, color) in acc.iter_mut().zip(&s.color) {
                    *slot += color * weight;
                }
                alpha_sum += weight;
                depth_acc += s.depth * weight;
                transmittance *= 1.0 - a;
                if transmittance < TRANSMITTANCE_CUTOFF {
                    break;
                }
            }
            for c in 0..3 {
                rgb[(c, v, u)] = acc[c];
            }
            alpha[(v, u)] = alpha_sum;
            depth[(v, u)] = if alpha_sum > 0.0 {
                depth_acc / alpha_sum
            } else {
                f64::INFINITY
            };
        }
    }
    SplatRender { rgb, alpha, depth }
}

/// Per-pixel winner selection by exhaustive depth sort, for checking the
/// z-buffered point projection on small clouds.
pub fn brute_force_project_points(
    cloud: &ColorPointCloud,
    intrinsics: &CameraIntrinsics,
    pose: &RigidPose,
) -> (Array3<f32>, Array2<f32>, Array2<f64>) {
    let (h, w) = (intrinsics.height, intrinsics.width);
    let mut rgb = Array3::<f32>::zeros((3, h, w));
    let mut coverage = Array2::<f32>::zeros((h, w));
    let mut zbuf = Array2::<f64>::from_elem((h, w), f64::INFINITY);

    for v in 0..h {
        for u in 0..w {
            // All candidates landing in this pixel.
            let mut best: Option<(f64, usize)> = None;
            for (i, p_world) in cloud.positions.iter().enumerate() {
                let p_cam = pose.apply_inverse(p_world);
                let in_front = p_cam.z.is_finite() && p_cam.z > NEAR_CLIP;
                if !in_front {
                    continue;
                }
                let (pu, pv) = intrinsics.project(&p_cam);
                if intrinsics.bin_pixel(pu, pv) != Some((u, v)) {
                    continue;
                }
                best = match best {
                    None => Some((p_cam.z, i)),
                    // A strictly nearer candidate (beyond the 1e-12 tie
                    // band) wins; otherwise the earlier index stays.
                    Some((bz, bi)) => {
                        if p_cam.z < bz - 1e-12 {
                            Some((p_cam.z, i))
                        } else {
                            Some((bz, bi))
                        }
                    }
                };
            }
            if let Some((z, i)) = best {
                zbuf[(v, u)] = z;
                coverage[(v, u)] = 1.0;
                for c in 0..3 {
                    rgb[(c, v, u)] = cloud.colors[i][c];
                }
            }
        }
    }
    (rgb, coverage, zbuf)
}
