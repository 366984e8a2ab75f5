//! EWA projection of 3D Gaussians to screen-space ellipses.

use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};

use super::{covariance_of, Gaussian3D, COV2D_FLOOR};
use crate::geometry::{CameraIntrinsics, RigidPose};
use crate::NEAR_CLIP;

/// A Gaussian after projection into one camera: screen mean, regularized
/// 2x2 covariance, camera depth, and the world-space view direction its
/// SH color should be evaluated at.
#[derive(Debug, Clone)]
pub struct ProjectedGaussian {
    pub mean2d: Vector2<f64>,
    pub cov2d: Matrix2<f64>,
    pub depth: f64,
    pub view_dir: Vector3<f64>,
    /// Half extents of the 3-sigma screen ellipse's axis-aligned bounding
    /// box, used for tile and pixel candidacy.
    pub radius: Vector2<f64>,
}

impl ProjectedGaussian {
    /// True when the center of pixel `(u, v)` falls inside the 3-sigma
    /// bounding box. This is the per-pixel contribution rule; tiles only
    /// accelerate it.
    pub fn covers_pixel(&self, u: usize, v: usize) -> bool {
        let du = (u as f64 + 0.5 - self.mean2d.x).abs();
        let dv = (v as f64 + 0.5 - self.mean2d.y).abs();
        du <= self.radius.x && dv <= self.radius.y
    }
}

/// Projects one Gaussian: mean through the pinhole, covariance through the
/// local affine (Jacobian) approximation `J * W * Sigma * W^T * J^T`, plus
/// the screen-space floor `0.3 * I`. Returns `None` for Gaussians at or
/// behind the near clip, which are culled from rasterization.
pub fn project_gaussian(
    g: &Gaussian3D,
    intrinsics: &CameraIntrinsics,
    pose: &RigidPose,
) -> Option<ProjectedGaussian> {
    let p_cam = pose.apply_inverse(&g.position);
    let z = p_cam.z;
    let in_front = z.is_finite() && z > NEAR_CLIP;
    if !in_front {
        return None;
    }
    let (u, v) = intrinsics.project(&p_cam);

    let w_rot = pose.rotation.transpose(); // world -> camera
    let cov_cam = w_rot * covariance_of(g) * w_rot.transpose();

    let (fx, fy) = (intrinsics.fx, intrinsics.fy);
    let jac = Matrix2x3::new(
        fx / z,
        0.0,
        -fx * p_cam.x / (z * z),
        0.0,
        fy / z,
        -fy * p_cam.y / (z * z),
    );
    let mut cov2d = jac * cov_cam * jac.transpose();
    cov2d[(0, 0)] += COV2D_FLOOR;
    cov2d[(1, 1)] += COV2D_FLOOR;
    // Exact symmetrization; the assembly above is symmetric up to rounding.
    let off = 0.5 * (cov2d[(0, 1)] + cov2d[(1, 0)]);
    cov2d[(0, 1)] = off;
    cov2d[(1, 0)] = off;

    // AABB of the 3-sigma ellipse: half extents 3*sqrt(diagonal).
    let radius = Vector2::new(3.0 * cov2d[(0, 0)].sqrt(), 3.0 * cov2d[(1, 1)].sqrt());

    let view_dir = (g.position - pose.translation).normalize();

    Some(ProjectedGaussian {
        mean2d: Vector2::new(u, v),
        cov2d,
        depth: z,
        view_dir,
        radius,
    })
}
