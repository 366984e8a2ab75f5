use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

// Serialized directly into scene and bundle manifests; all fields are
// plain scalars.

/// Pinhole camera intrinsics. Image sizes must be divisible by 8 so pixel
/// masks stay aligned with 8x-downsampled latents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal lengths in pixels.
    pub fx: f64,
    pub fy: f64,
    /// Principal point in pixels.
    pub cx: f64,
    pub cy: f64,
    /// Image size in pixels.
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::invalid(
                "intrinsics",
                format!("focal lengths must be positive, got ({}, {})", self.fx, self.fy),
            ));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64)
            || !(0.0 <= self.cy && self.cy < self.height as f64)
        {
            return Err(Error::invalid(
                "intrinsics",
                format!(
                    "principal point ({}, {}) outside {}x{} image",
                    self.cx, self.cy, self.width, self.height
                ),
            ));
        }
        if self.width == 0 || self.height == 0 || !self.width.is_multiple_of(8) || !self.height.is_multiple_of(8) {
            return Err(Error::invalid(
                "intrinsics",
                format!("image size {}x{} must be divisible by 8", self.width, self.height),
            ));
        }
        Ok(())
    }

    /// Camera-frame ray direction through the center of pixel `(u, v)`,
    /// with unit z component.
    pub fn pixel_ray(&self, u: usize, v: usize) -> Vector3<f64> {
        Vector3::new(
            (u as f64 + 0.5 - self.cx) / self.fx,
            (v as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        )
    }

    /// Projects a camera-frame point to continuous pixel coordinates.
    /// The caller is responsible for depth clipping.
    pub fn project(&self, p_cam: &Vector3<f64>) -> (f64, f64) {
        (
            self.fx * p_cam.x / p_cam.z + self.cx,
            self.fy * p_cam.y / p_cam.z + self.cy,
        )
    }

    /// Bins continuous pixel coordinates to an integer pixel, or `None`
    /// outside the image.
    pub fn bin_pixel(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        if !u.is_finite() || !v.is_finite() || u < 0.0 || v < 0.0 {
            return None;
        }
        let (ui, vi) = (u.floor() as usize, v.floor() as usize);
        (ui < self.width && vi < self.height).then_some((ui, vi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 110.0, 32.5, 24.5, 64, 48).unwrap()
    }

    #[test]
    fn principal_ray_is_optical_axis() {
        // Pixel whose center sits on the principal point.
        let k = k();
        let ray = k.pixel_ray(32, 24);
        assert_eq!(ray, Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn project_bin_inverts_pixel_ray() {
        let k = k();
        for (u, v) in [(0, 0), (63, 47), (17, 31)] {
            let p = k.pixel_ray(u, v) * 4.0;
            let (pu, pv) = k.project(&p);
            assert_eq!(k.bin_pixel(pu, pv), Some((u, v)));
        }
    }

    #[test]
    fn invalid_intrinsics_rejected() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0, 8, 8).is_err());
        assert!(CameraIntrinsics::new(10.0, 10.0, 9.0, 0.0, 8, 8).is_err()); // cx >= width
        assert!(CameraIntrinsics::new(10.0, 10.0, 0.0, 0.0, 12, 8).is_err()); // not /8
    }

    #[test]
    fn bin_pixel_rejects_outside() {
        let k = k();
        assert_eq!(k.bin_pixel(-0.1, 5.0), None);
        assert_eq!(k.bin_pixel(64.0, 5.0), None);
        assert_eq!(k.bin_pixel(5.0, f64::NAN), None);
    }
}
