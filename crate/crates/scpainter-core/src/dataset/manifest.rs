//! `scene.json`: the on-disk scene description.
//!
//! The manifest lists per-frame file paths (PNG image, `.scpt` depth with
//! validity flag channel), camera intrinsics and pose arrays, per-frame
//! boxes, asset PLY paths, and box placements `(asset id, frame index,
//! center, dims, heading)`. All paths are relative to the manifest's
//! directory. Upstream dataset converters are expected to emit this
//! schema; the loader validates everything it reads.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Scene, SceneAsset};
use crate::geometry::{heading_rotation, CameraIntrinsics, Frame, OrientedBox3D, RigidPose};
use crate::ply::{self, AssetConvention};
use crate::{imageio, tensor, Error, Result};

#[derive(Debug, Serialize, Deserialize)]
pub struct BoxEntry {
    pub center: [f64; 3],
    pub dims: [f64; 3],
    pub heading: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrameEntry {
    pub image: String,
    pub depth: String,
    pub intrinsics: CameraIntrinsics,
    /// Row-major rotation rows, camera-to-world.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    #[serde(default)]
    pub boxes: Vec<BoxEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AssetEntry {
    pub id: String,
    pub ply: String,
    /// "plain" (default) or "reference" for log-scale/logit-opacity
    /// exports.
    #[serde(default = "default_convention")]
    pub convention: String,
}

fn default_convention() -> String {
    "plain".to_string()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlacementEntry {
    pub asset: String,
    pub frame: usize,
    pub center: [f64; 3],
    pub dims: [f64; 3],
    pub heading: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SceneManifest {
    pub frames: Vec<FrameEntry>,
    #[serde(default)]
    pub assets: Vec<AssetEntry>,
    #[serde(default)]
    pub placements: Vec<PlacementEntry>,
}

impl BoxEntry {
    pub fn to_box(&self) -> Result<OrientedBox3D> {
        OrientedBox3D::with_heading(
            Vector3::from(self.center),
            (self.dims[0], self.dims[1], self.dims[2]),
            self.heading,
        )
    }

    /// Serializable form of a box; only heading-aligned rotations fit the
    /// manifest schema.
    pub fn from_box(b: &OrientedBox3D) -> Result<BoxEntry> {
        let heading = b.rotation[(0, 2)].atan2(b.rotation[(0, 0)]);
        let rebuilt = heading_rotation(heading);
        let dev = (b.rotation - rebuilt)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if dev > 1e-9 {
            return Err(Error::invalid(
                "box",
                "only heading (yaw) rotations can be stored in a scene manifest",
            ));
        }
        Ok(BoxEntry {
            center: [b.center.x, b.center.y, b.center.z],
            dims: [b.dims.0, b.dims.1, b.dims.2],
            heading,
        })
    }
}

/// Writes the scene and all referenced files under `dir`:
/// `frames/rgb_%04d.png`, `frames/depth_%04d.scpt`, `assets/<id>.ply`
/// (plus box sidecars), and `scene.json`. Returns the manifest path.
pub fn save_scene(dir: impl AsRef<Path>, scene: &Scene) -> Result<PathBuf> {
    let dir = dir.as_ref();
    scene.validate()?;
    let frames_dir = dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;

    let mut frame_entries = Vec::with_capacity(scene.frames.len());
    for (i, f) in scene.frames.iter().enumerate() {
        let image_rel = format!("frames/rgb_{i:04}.png");
        let depth_rel = format!("frames/depth_{i:04}.scpt");
        imageio::save_rgb(dir.join(&image_rel), &f.image)?;
        tensor::write_tensor(dir.join(&depth_rel), f.depth_to_tensor().view().into_dyn())?;
        let (rotation, translation) = f.pose.to_arrays();
        frame_entries.push(FrameEntry {
            image: image_rel,
            depth: depth_rel,
            intrinsics: f.intrinsics,
            rotation,
            translation,
            boxes: f.boxes.iter().map(BoxEntry::from_box).collect::<Result<_>>()?,
        });
    }

    let mut asset_entries = Vec::new();
    let mut placement_entries = Vec::new();
    if !scene.assets.is_empty() {
        let assets_dir = dir.join("assets");
        std::fs::create_dir_all(&assets_dir).map_err(|e| Error::io(&assets_dir, e))?;
        for sa in &scene.assets {
            let ply_rel = format!("assets/{}.ply", sa.id);
            ply::write_asset(dir.join(&ply_rel), &sa.asset)?;
            asset_entries.push(AssetEntry {
                id: sa.id.clone(),
                ply: ply_rel,
                convention: default_convention(),
            });
            for (frame, b) in &sa.placements {
                let entry = BoxEntry::from_box(b)?;
                placement_entries.push(PlacementEntry {
                    asset: sa.id.clone(),
                    frame: *frame,
                    center: entry.center,
                    dims: entry.dims,
                    heading: entry.heading,
                });
            }
        }
    }

    let manifest = SceneManifest {
        frames: frame_entries,
        assets: asset_entries,
        placements: placement_entries,
    };
    let path = dir.join("scene.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::malformed(&path, e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Loads and validates a scene from its `scene.json`.
pub fn load_scene(manifest_path: impl AsRef<Path>) -> Result<Scene> {
    load_scene_with(manifest_path, None)
}

/// Like [`load_scene`], with an optional asset-convention override (the
/// `--gs-reference-convention` loader flag) applied to every asset
/// regardless of what the manifest declares.
pub fn load_scene_with(
    manifest_path: impl AsRef<Path>,
    convention_override: Option<AssetConvention>,
) -> Result<Scene> {
    let manifest_path = manifest_path.as_ref();
    let manifest: SceneManifest = serde_json::from_str(
        &std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?,
    )
    .map_err(|e| Error::malformed(manifest_path, e.to_string()))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut frames = Vec::with_capacity(manifest.frames.len());
    for entry in &manifest.frames {
        let image = imageio::load_rgb(base.join(&entry.image))?;
        let depth_t = tensor::read_tensor3(base.join(&entry.depth))?;
        let depth = Frame::depth_from_tensor(&depth_t)?;
        let pose = RigidPose::from_arrays(entry.rotation, entry.translation)?;
        let boxes = entry
            .boxes
            .iter()
            .map(|b| b.to_box())
            .collect::<Result<Vec<_>>>()?;
        frames.push(Frame::new(image, depth, entry.intrinsics, pose, boxes)?);
    }

    let mut assets = Vec::with_capacity(manifest.assets.len());
    for entry in &manifest.assets {
        let convention = match convention_override {
            Some(c) => c,
            None => match entry.convention.as_str() {
                "plain" => AssetConvention::Plain,
                "reference" => AssetConvention::Reference,
                other => {
                    return Err(Error::malformed(
                        manifest_path,
                        format!("asset '{}': unknown convention '{other}'", entry.id),
                    ))
                }
            },
        };
        let asset = ply::read_asset(base.join(&entry.ply), convention)?;
        let placements = manifest
            .placements
            .iter()
            .filter(|p| p.asset == entry.id)
            .map(|p| {
                let b = OrientedBox3D::with_heading(
                    Vector3::from(p.center),
                    (p.dims[0], p.dims[1], p.dims[2]),
                    p.heading,
                )?;
                Ok((p.frame, b))
            })
            .collect::<Result<Vec<_>>>()?;
        assets.push(SceneAsset {
            id: entry.id.clone(),
            asset,
            placements,
        });
    }
    for p in &manifest.placements {
        if !manifest.assets.iter().any(|a| a.id == p.asset) {
            return Err(Error::malformed(
                manifest_path,
                format!("placement references unknown asset '{}'", p.asset),
            ));
        }
    }

    let scene = Scene { frames, assets };
    scene.validate()?;
    Ok(scene)
}
