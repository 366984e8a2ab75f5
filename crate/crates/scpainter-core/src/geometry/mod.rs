//! Camera models, rigid transforms, depth unprojection, and z-buffered
//! point projection.
//!
//! Conventions used throughout the crate:
//!
//! - Camera frame: +x right, +y down, +z forward (optical axis). World up
//!   is therefore -y for an identity pose.
//! - Pixel `(u, v)` means column `u`, row `v`; its center sits at the
//!   continuous coordinate `(u + 0.5, v + 0.5)`. Unprojection casts rays
//!   through pixel centers; projection bins continuous coordinates by
//!   truncation, so a projected pixel center falls back into its own pixel.
//! - Poses are camera-to-world. `pose.apply(p)` maps camera-frame points
//!   into the world.

mod boxes;
mod camera;
mod cloud;
mod frame;
mod pose;

pub use boxes::{heading_rotation, OrientedBox3D};
pub use camera::CameraIntrinsics;
pub use cloud::{project_points, unproject, ColorPointCloud, PointProjection};
pub use frame::Frame;
pub use pose::RigidPose;
