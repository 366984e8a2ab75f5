use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

/// Orthonormality / determinant tolerance for pose validation.
const POSE_TOL: f64 = 1e-9;

/// Rigid camera-to-world transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    /// Rotation, camera frame to world frame. Columns are the camera's
    /// right / down / forward axes expressed in world coordinates.
    pub rotation: Matrix3<f64>,
    /// Camera center in world coordinates, meters.
    pub translation: Vector3<f64>,
}

impl RigidPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let pose = RigidPose {
            rotation,
            translation,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn identity() -> Self {
        RigidPose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("pose", "non-finite translation"));
        }
        let gram = self.rotation.transpose() * self.rotation;
        let max_dev = (gram - Matrix3::identity())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if max_dev > POSE_TOL {
            return Err(Error::invalid(
                "pose",
                format!("rotation not orthonormal (deviation {max_dev:.2e})"),
            ));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > POSE_TOL {
            return Err(Error::invalid(
                "pose",
                format!("rotation determinant {det} != 1"),
            ));
        }
        Ok(())
    }

    /// Maps a camera-frame point into the world.
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Maps a world point into the camera frame.
    pub fn apply_inverse(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    /// `compose(a, b)` applies `b` first, then `a`.
    pub fn compose(a: &RigidPose, b: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: a.rotation * b.rotation,
            translation: a.rotation * b.translation + a.translation,
        }
    }

    pub fn invert(&self) -> RigidPose {
        let rt = self.rotation.transpose();
        RigidPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// The camera's +x (right) axis in world coordinates. Lateral
    /// trajectory shifts translate along this direction.
    pub fn right_axis(&self) -> Vector3<f64> {
        self.rotation.column(0).into()
    }

    /// Row-major rotation rows plus translation, for JSON manifests.
    pub fn to_arrays(&self) -> ([[f64; 3]; 3], [f64; 3]) {
        let r = &self.rotation;
        (
            [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            [self.translation.x, self.translation.y, self.translation.z],
        )
    }

    pub fn from_arrays(rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Result<Self> {
        let r = Matrix3::from_fn(|i, j| rotation[i][j]);
        RigidPose::new(r, Vector3::from(translation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Rotation3, Unit};

    fn sample_pose(axis: [f64; 3], angle: f64, t: [f64; 3]) -> RigidPose {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::from(axis)), angle);
        RigidPose::new(rot.into_inner(), Vector3::from(t)).unwrap()
    }

    #[test]
    fn compose_with_identity_is_identity_law() {
        let p = sample_pose([0.3, -1.0, 0.2], 0.7, [1.0, 2.0, 3.0]);
        let c = RigidPose::compose(&RigidPose::identity(), &p);
        assert_abs_diff_eq!(c.rotation, p.rotation, epsilon = 1e-15);
        assert_abs_diff_eq!(c.translation, p.translation, epsilon = 1e-15);
    }

    #[test]
    fn invert_is_involution() {
        let p = sample_pose([1.0, 0.5, -0.3], -1.2, [-4.0, 0.25, 9.0]);
        let back = p.invert().invert();
        assert_abs_diff_eq!(back.rotation, p.rotation, epsilon = 1e-9);
        assert_abs_diff_eq!(back.translation, p.translation, epsilon = 1e-9);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = sample_pose([0.1, 0.9, 0.4], 2.1, [5.0, -2.0, 1.5]);
        let id = RigidPose::compose(&p, &p.invert());
        assert_abs_diff_eq!(id.rotation, Matrix3::identity(), epsilon = 1e-9);
        assert_abs_diff_eq!(id.translation, Vector3::zeros(), epsilon = 1e-9);
    }

    #[test]
    fn non_orthonormal_rotation_rejected() {
        let mut rot = Matrix3::identity();
        rot[(0, 0)] = 1.1;
        assert!(RigidPose::new(rot, Vector3::zeros()).is_err());
    }

    #[test]
    fn reflection_rejected() {
        let mut rot = Matrix3::identity();
        rot[(2, 2)] = -1.0; // det = -1, still orthonormal
        assert!(RigidPose::new(rot, Vector3::zeros()).is_err());
    }
}
