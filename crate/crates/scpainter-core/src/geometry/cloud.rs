use nalgebra::Vector3;
use ndarray::{Array2, Array3};
use rayon::prelude::*;

use super::{CameraIntrinsics, Frame, RigidPose};
use crate::NEAR_CLIP;

/// Two candidate depths within this distance count as tied in the
/// z-buffer; the lower cloud index wins.
const ZBUF_TIE: f64 = 1e-12;

/// World-space colorized points. One point per valid-depth source pixel.
#[derive(Debug, Clone, Default)]
pub struct ColorPointCloud {
    pub positions: Vec<Vector3<f64>>,
    /// RGB in `[0, 1]`, parallel to `positions`.
    pub colors: Vec<[f32; 3]>,
    /// Index of the originating frame, when the cloud comes from one.
    pub source_frame: Option<usize>,
}

impl ColorPointCloud {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Appends another cloud, keeping point order (self first).
    pub fn extend(&mut self, other: &ColorPointCloud) {
        self.positions.extend_from_slice(&other.positions);
        self.colors.extend_from_slice(&other.colors);
        if self.source_frame != other.source_frame {
            self.source_frame = None;
        }
    }

    /// Keeps only points for which `keep` returns true, preserving order.
    pub fn retain(&mut self, mut keep: impl FnMut(&Vector3<f64>) -> bool) {
        let mut write = 0;
        for read in 0..self.positions.len() {
            if keep(&self.positions[read]) {
                self.positions[write] = self.positions[read];
                self.colors[write] = self.colors[read];
                write += 1;
            }
        }
        self.positions.truncate(write);
        self.colors.truncate(write);
    }
}

/// Result of projecting a point cloud into a camera.
#[derive(Debug, Clone)]
pub struct PointProjection {
    /// `(3, H, W)`; zero where nothing landed.
    pub rgb: Array3<f32>,
    /// `(H, W)`; 1.0 where at least one point landed.
    pub coverage: Array2<f32>,
    /// `(H, W)` camera-space depth of the winning point; +inf where empty.
    pub zbuf: Array2<f64>,
}

/// Lifts every valid-depth pixel to a world point through the pixel-center
/// ray, copying the pixel color. Points come out in row-major pixel order.
/// The frame index belongs to the caller (`source_frame` stays unset).
pub fn unproject(frame: &Frame) -> ColorPointCloud {
    let (h, w) = (frame.height(), frame.width());
    let mut cloud = ColorPointCloud::default();
    for v in 0..h {
        for u in 0..w {
            if !frame.depth_valid(v, u) {
                continue;
            }
            let d = frame.depth[(v, u)] as f64;
            let p_cam = frame.intrinsics.pixel_ray(u, v) * d;
            cloud.positions.push(frame.pose.apply(&p_cam));
            cloud.colors.push([
                frame.image[(0, v, u)],
                frame.image[(1, v, u)],
                frame.image[(2, v, u)],
            ]);
        }
    }
    cloud
}

/// Projects a cloud into a camera with a 1-pixel splat per point and a
/// z-buffer. Points behind the near clip are discarded. Depth ties within
/// 1e-12 resolve to the lower point index, so the output is independent of
/// thread count: the candidate pass parallelizes over points, the scatter
/// pass runs in index order.
pub fn project_points(
    cloud: &ColorPointCloud,
    intrinsics: &CameraIntrinsics,
    pose: &RigidPose,
) -> PointProjection {
    let (h, w) = (intrinsics.height, intrinsics.width);
    let mut rgb = Array3::<f32>::zeros((3, h, w));
    let mut coverage = Array2::<f32>::zeros((h, w));
    let mut zbuf = Array2::<f64>::from_elem((h, w), f64::INFINITY);

    // (pixel, depth) per point; None when culled or off-screen.
    let candidates: Vec<Option<(usize, usize, f64)>> = cloud
        .positions
        .par_iter()
        .map(|p_world| {
            let p_cam = pose.apply_inverse(p_world);
            let in_front = p_cam.z.is_finite() && p_cam.z > NEAR_CLIP;
            if !in_front {
                return None;
            }
            let (pu, pv) = intrinsics.project(&p_cam);
            intrinsics.bin_pixel(pu, pv).map(|(u, v)| (u, v, p_cam.z))
        })
        .collect();

    for (idx, cand) in candidates.into_iter().enumerate() {
        let Some((u, v, z)) = cand else { continue };
        // Covers the empty-pixel case too: anything beats the +inf sentinel.
        if z < zbuf[(v, u)] - ZBUF_TIE {
            zbuf[(v, u)] = z;
            coverage[(v, u)] = 1.0;
            let c = cloud.colors[idx];
            rgb[(0, v, u)] = c[0];
            rgb[(1, v, u)] = c[1];
            rgb[(2, v, u)] = c[2];
        }
    }

    PointProjection {
        rgb,
        coverage,
        zbuf,
    }
}
