use ndarray::{Array2, Array3};

use super::{CameraIntrinsics, OrientedBox3D, RigidPose};
use crate::{Error, Result};

/// One observed frame: RGB image, per-pixel depth, camera, and oriented
/// boxes for objects visible in the frame.
///
/// Depth is stored as a single map; a pixel is valid iff its value is
/// finite and > 0. On disk the map travels with an explicit flag channel
/// (see [`Frame::depth_to_tensor`]) so the validity survives file
/// round-trips even if NaNs get rewritten.
#[derive(Debug, Clone)]
pub struct Frame {
    /// `(3, H, W)`, each channel in `[0, 1]`.
    pub image: Array3<f32>,
    /// `(H, W)` depth in meters; non-finite or <= 0 marks invalid pixels.
    pub depth: Array2<f32>,
    pub intrinsics: CameraIntrinsics,
    pub pose: RigidPose,
    pub boxes: Vec<OrientedBox3D>,
}

impl Frame {
    pub fn new(
        image: Array3<f32>,
        depth: Array2<f32>,
        intrinsics: CameraIntrinsics,
        pose: RigidPose,
        boxes: Vec<OrientedBox3D>,
    ) -> Result<Self> {
        let f = Frame {
            image,
            depth,
            intrinsics,
            pose,
            boxes,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        self.pose.validate()?;
        let (h, w) = (self.intrinsics.height, self.intrinsics.width);
        if self.image.dim() != (3, h, w) {
            return Err(Error::shape(format!("(3, {h}, {w})"), format!("{:?}", self.image.dim())));
        }
        if self.depth.dim() != (h, w) {
            return Err(Error::shape(format!("({h}, {w})"), format!("{:?}", self.depth.dim())));
        }
        for b in &self.boxes {
            b.validate()?;
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    pub fn depth_valid(&self, v: usize, u: usize) -> bool {
        let d = self.depth[(v, u)];
        d.is_finite() && d > 0.0
    }

    /// `(H, W)` validity mask, 1.0 where depth is usable.
    pub fn validity_mask(&self) -> Array2<f32> {
        Array2::from_shape_fn(self.depth.dim(), |(v, u)| {
            if self.depth_valid(v, u) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Packs depth as a `(2, H, W)` tensor: channel 0 the raw map, channel
    /// 1 the validity flag.
    pub fn depth_to_tensor(&self) -> Array3<f32> {
        let (h, w) = self.depth.dim();
        let mut t = Array3::<f32>::zeros((2, h, w));
        for v in 0..h {
            for u in 0..w {
                t[(0, v, u)] = self.depth[(v, u)];
                t[(1, v, u)] = if self.depth_valid(v, u) { 1.0 } else { 0.0 };
            }
        }
        t
    }

    /// Inverse of [`Frame::depth_to_tensor`]: pixels whose flag is unset
    /// come back as NaN regardless of the stored value.
    pub fn depth_from_tensor(t: &Array3<f32>) -> Result<Array2<f32>> {
        let (c, h, w) = t.dim();
        if c != 2 {
            return Err(Error::shape("(2, H, W)", format!("{:?}", t.dim())));
        }
        Ok(Array2::from_shape_fn((h, w), |(v, u)| {
            let d = t[(0, v, u)];
            if t[(1, v, u)] > 0.5 && d.is_finite() && d > 0.0 {
                d
            } else {
                f32::NAN
            }
        }))
    }
}
