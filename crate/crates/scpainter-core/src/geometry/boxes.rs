use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

/// Oriented 3D bounding box.
///
/// `dims` is `(length, width, height)` in meters. In the box's local frame,
/// length runs along local x, height along local y (the world up direction
/// is -y, matching the camera convention), and width along local z.
/// `heading` constructs a rotation about the world y axis; arbitrary
/// rotations are permitted through [`OrientedBox3D::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox3D {
    pub center: Vector3<f64>,
    pub dims: (f64, f64, f64),
    pub rotation: Matrix3<f64>,
}

impl OrientedBox3D {
    pub fn new(center: Vector3<f64>, dims: (f64, f64, f64), rotation: Matrix3<f64>) -> Result<Self> {
        let b = OrientedBox3D {
            center,
            dims,
            rotation,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn with_heading(center: Vector3<f64>, dims: (f64, f64, f64), heading: f64) -> Result<Self> {
        Self::new(center, dims, heading_rotation(heading))
    }

    /// Axis-aligned box centered at the origin, as used for canonical
    /// asset frames.
    pub fn canonical(dims: (f64, f64, f64)) -> Result<Self> {
        Self::new(Vector3::zeros(), dims, Matrix3::identity())
    }

    pub fn validate(&self) -> Result<()> {
        let (l, w, h) = self.dims;
        if !(l > 0.0 && w > 0.0 && h > 0.0) {
            return Err(Error::invalid(
                "box",
                format!("dims must be positive, got ({l}, {w}, {h})"),
            ));
        }
        Ok(())
    }

    /// Half-extents along the local x / y / z axes.
    pub fn local_half_extents(&self) -> Vector3<f64> {
        let (l, w, h) = self.dims;
        Vector3::new(l / 2.0, h / 2.0, w / 2.0)
    }

    /// World point expressed in the box's local frame.
    pub fn to_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.center)
    }

    /// Local point expressed in the world frame.
    pub fn to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.center
    }

    /// Containment test with the box dims scaled by `dilation`
    /// (1.0 = exact box).
    pub fn contains_dilated(&self, p: &Vector3<f64>, dilation: f64) -> bool {
        let q = self.to_local(p);
        let he = self.local_half_extents() * dilation;
        q.x.abs() <= he.x && q.y.abs() <= he.y && q.z.abs() <= he.z
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.contains_dilated(p, 1.0)
    }
}

/// Rotation about the world up axis (y) by `heading` radians.
pub fn heading_rotation(heading: f64) -> Matrix3<f64> {
    let (s, c) = heading.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}
