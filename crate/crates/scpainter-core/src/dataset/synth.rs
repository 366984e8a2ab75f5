//! Procedural test scenes with analytic depth.
//!
//! A scene is a textured ground plane plus colored cuboids, ray-cast into
//! a straight camera path. Depth is the exact camera-space z of the first
//! hit, so geometric oracles (reprojection, disocclusion, removal counts)
//! have closed-form ground truth. Everything is a pure function of the
//! spec and seed: two runs produce bit-identical scenes.

use nalgebra::Vector3;
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Scene, SceneAsset};
use crate::geometry::{CameraIntrinsics, Frame, OrientedBox3D, RigidPose};
use crate::splat::{sh, Gaussian3D, GaussianAsset};
use crate::{Error, Result, NEAR_CLIP};

/// One cuboid: centered at `center`, dims `(length, width, height)`,
/// yawed by `heading` about the world up axis.
#[derive(Debug, Clone)]
pub struct SynthCuboid {
    pub center: Vector3<f64>,
    pub dims: (f64, f64, f64),
    pub heading: f64,
    /// Base color; faces are shaded with fixed per-axis factors.
    pub color: [f32; 3],
}

/// Generator parameters.
#[derive(Debug, Clone)]
pub struct SynthSceneSpec {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    /// Focal length in pixels (fx = fy).
    pub focal: f64,
    /// Ground plane height: world y of the plane (y points down, so the
    /// plane sits at positive y below the camera).
    pub plane_y: f64,
    /// Checker cell size on the ground, meters.
    pub checker_size: f64,
    pub cuboids: Vec<SynthCuboid>,
    /// Camera translation per frame, world meters (rotation stays
    /// identity along the path).
    pub camera_step: Vector3<f64>,
    /// Builds a Gaussian asset replica of cuboid 0 with a placement in
    /// every frame, for insertion pairs.
    pub with_asset: bool,
}

impl SynthSceneSpec {
    /// The canonical desk-scale scene used across the test and
    /// acceptance suites: 64x64 frames, ground plane, two cuboids, one
    /// insertable asset.
    pub fn canonical() -> Self {
        SynthSceneSpec {
            width: 64,
            height: 64,
            n_frames: 8,
            focal: 64.0,
            plane_y: 1.5,
            checker_size: 1.0,
            cuboids: vec![
                SynthCuboid {
                    center: Vector3::new(-1.0, 0.75, 6.0),
                    dims: (1.6, 0.9, 1.5),
                    heading: 0.0,
                    color: [0.8, 0.2, 0.15],
                },
                SynthCuboid {
                    center: Vector3::new(1.4, 1.0, 9.0),
                    dims: (1.2, 1.2, 1.0),
                    heading: 0.35,
                    color: [0.15, 0.35, 0.8],
                },
            ],
            camera_step: Vector3::new(0.15, 0.0, 0.4),
            with_asset: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 {
            return Err(Error::invalid("scene spec", "n_frames must be >= 1"));
        }
        if !self.camera_step.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("scene spec", "non-finite camera step"));
        }
        if !(self.plane_y.is_finite() && self.focal > 0.0 && self.checker_size > 0.0) {
            return Err(Error::invalid("scene spec", "bad plane/focal/checker parameters"));
        }
        for c in &self.cuboids {
            let (l, w, h) = c.dims;
            if !(l > 0.0 && w > 0.0 && h > 0.0) {
                return Err(Error::invalid("scene spec", "cuboid dims must be positive"));
            }
        }
        Ok(())
    }
}

/// First-hit result of a ray against the scene geometry.
#[derive(Debug, Clone, Copy)]
pub struct RayHit {
    /// Camera-space z of the hit (ray parameter for a z=1 direction).
    pub depth: f64,
    pub color: [f32; 3],
    pub world: Vector3<f64>,
}

/// Scene geometry bundled for direct ray queries; tests use this as the
/// analytic ground truth independent of any renderer.
#[derive(Debug, Clone)]
pub struct SynthGeometry {
    pub plane_y: f64,
    pub checker_size: f64,
    pub plane_colors: [[f32; 3]; 2],
    pub boxes: Vec<(OrientedBox3D, [f32; 3])>,
}

impl SynthGeometry {
    /// Casts the pixel-center ray of `(u, v)` and returns the first hit.
    /// The direction has unit z in the camera frame, so the ray parameter
    /// at the hit equals the camera-space depth.
    pub fn cast(&self, intrinsics: &CameraIntrinsics, pose: &RigidPose, u: usize, v: usize) -> Option<RayHit> {
        let dir_cam = intrinsics.pixel_ray(u, v);
        let dir = pose.rotation * dir_cam;
        let origin = pose.translation;
        self.cast_world(&origin, &dir)
    }

    /// Ray query in world space; `dir` must have unit camera-z so the
    /// parameter is the depth.
    pub fn cast_world(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<RayHit> {
        let mut best: Option<RayHit> = None;

        // Ground plane.
        if dir.y.abs() > 1e-12 {
            let s = (self.plane_y - origin.y) / dir.y;
            if s > NEAR_CLIP {
                let world = origin + dir * s;
                let hit = RayHit {
                    depth: s,
                    color: self.plane_color_at(world.x, world.z),
                    world,
                };
                best = Some(hit);
            }
        }

        for (b, color) in &self.boxes {
            if let Some((s, axis)) = ray_box_entry(origin, dir, b) {
                if s > NEAR_CLIP && best.is_none_or(|h| s < h.depth) {
                    let shade = match axis {
                        0 => 0.9,
                        1 => 1.0,
                        _ => 0.8,
                    };
                    best = Some(RayHit {
                        depth: s,
                        color: [color[0] * shade, color[1] * shade, color[2] * shade],
                        world: origin + dir * s,
                    });
                }
            }
        }
        best
    }

    pub fn plane_color_at(&self, x: f64, z: f64) -> [f32; 3] {
        let cx = (x / self.checker_size).floor() as i64;
        let cz = (z / self.checker_size).floor() as i64;
        let base = self.plane_colors[((cx + cz).rem_euclid(2)) as usize];
        // Deterministic per-cell jitter, independent of evaluation order.
        let h = splitmix(cx as u64 ^ (cz as u64).rotate_left(32));
        let jitter = ((h % 1000) as f32 / 1000.0 - 0.5) * 0.08;
        [
            (base[0] + jitter).clamp(0.0, 1.0),
            (base[1] + jitter).clamp(0.0, 1.0),
            (base[2] + jitter).clamp(0.0, 1.0),
        ]
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Slab-test entry point of a ray into an oriented box. Returns the ray
/// parameter and the local axis (0/1/2) whose face was crossed.
fn ray_box_entry(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    b: &OrientedBox3D,
) -> Option<(f64, usize)> {
    let o = b.to_local(origin);
    let d = b.rotation.transpose() * dir;
    let he = b.local_half_extents();

    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    let mut enter_axis = 0usize;
    for a in 0..3 {
        if d[a].abs() < 1e-12 {
            if o[a].abs() > he[a] {
                return None;
            }
            continue;
        }
        let t0 = (-he[a] - o[a]) / d[a];
        let t1 = (he[a] - o[a]) / d[a];
        let (tmin, tmax) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        if tmin > t_enter {
            t_enter = tmin;
            enter_axis = a;
        }
        t_exit = t_exit.min(tmax);
        if t_enter > t_exit {
            return None;
        }
    }
    (t_enter > 0.0).then_some((t_enter, enter_axis))
}

/// Geometry (for analytic queries) without rendering any frames.
pub fn synth_geometry(spec: &SynthSceneSpec, rng_seed: u64) -> Result<SynthGeometry> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut color = || {
        [
            rng.random_range(0.2..0.8f32),
            rng.random_range(0.2..0.8f32),
            rng.random_range(0.2..0.8f32),
        ]
    };
    let plane_colors = [color(), color()];
    let boxes = spec
        .cuboids
        .iter()
        .map(|c| {
            Ok((
                OrientedBox3D::with_heading(c.center, c.dims, c.heading)?,
                c.color,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthGeometry {
        plane_y: spec.plane_y,
        checker_size: spec.checker_size,
        plane_colors,
        boxes,
    })
}

/// The camera at frame `t` of the path.
pub fn synth_camera(spec: &SynthSceneSpec, t: usize) -> (CameraIntrinsics, RigidPose) {
    let k = CameraIntrinsics {
        fx: spec.focal,
        fy: spec.focal,
        cx: spec.width as f64 / 2.0 + 0.5,
        cy: spec.height as f64 / 2.0 + 0.5,
        width: spec.width,
        height: spec.height,
    };
    let pose = RigidPose {
        rotation: nalgebra::Matrix3::identity(),
        translation: spec.camera_step * t as f64,
    };
    (k, pose)
}

/// Renders the full scene: per-frame images and analytic depth maps, the
/// static boxes, and (optionally) a splat-asset replica of cuboid 0
/// placed in every frame.
pub fn synth_scene(spec: &SynthSceneSpec, rng_seed: u64) -> Result<Scene> {
    let geom = synth_geometry(spec, rng_seed)?;
    let (w, h) = (spec.width, spec.height);

    let mut frames = Vec::with_capacity(spec.n_frames);
    for t in 0..spec.n_frames {
        let (k, pose) = synth_camera(spec, t);
        k.validate()?;
        let mut image = Array3::<f32>::zeros((3, h, w));
        let mut depth = Array2::<f32>::from_elem((h, w), f32::NAN);
        for v in 0..h {
            for u in 0..w {
                match geom.cast(&k, &pose, u, v) {
                    Some(hit) => {
                        depth[(v, u)] = hit.depth as f32;
                        for c in 0..3 {
                            image[(c, v, u)] = hit.color[c];
                        }
                    }
                    None => {
                        // Sky: no depth.
                        image[(0, v, u)] = 0.55;
                        image[(1, v, u)] = 0.7;
                        image[(2, v, u)] = 0.9;
                    }
                }
            }
        }
        let boxes = geom.boxes.iter().map(|(b, _)| *b).collect();
        frames.push(Frame::new(image, depth, k, pose, boxes)?);
    }

    let mut assets = Vec::new();
    if spec.with_asset {
        if let Some((box0, color)) = geom.boxes.first() {
            let asset = cuboid_asset(box0.dims, *color)?;
            let placements = (0..spec.n_frames).map(|t| (t, *box0)).collect();
            assets.push(SceneAsset {
                id: "asset0".to_string(),
                asset,
                placements,
            });
        }
    }

    let scene = Scene { frames, assets };
    scene.validate()?;
    Ok(scene)
}

/// A boxy splat asset: a 4x4x4 grid of isotropic Gaussians filling the
/// canonical box. The color is deliberately offset from the observed
/// cuboid — a generated asset never matches the real object exactly.
pub fn cuboid_asset(dims: (f64, f64, f64), color: [f32; 3]) -> Result<GaussianAsset> {
    let canonical = OrientedBox3D::canonical(dims)?;
    let he = canonical.local_half_extents();
    let n = 4usize;
    let sigma = (he.x.min(he.y).min(he.z) * 2.0) / (n as f64 * 2.5);
    let mut gaussians = Vec::with_capacity(n * n * n);
    let tinted = [
        (color[0] as f64 * 0.85 + 0.1).clamp(0.0, 1.0),
        (color[1] as f64 * 0.85 + 0.1).clamp(0.0, 1.0),
        (color[2] as f64 * 0.85 + 0.1).clamp(0.0, 1.0),
    ];
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                let frac = |i: usize, half: f64| (i as f64 + 0.5) / n as f64 * 2.0 * half - half;
                let p = Vector3::new(frac(ix, he.x * 0.9), frac(iy, he.y * 0.9), frac(iz, he.z * 0.9));
                gaussians.push(Gaussian3D {
                    position: p,
                    scale: Vector3::new(sigma, sigma, sigma),
                    rotation: nalgebra::UnitQuaternion::identity(),
                    opacity: 0.85,
                    sh: vec![sh::dc_from_rgb(tinted)],
                });
            }
        }
    }
    GaussianAsset::new(gaussians, canonical)
}
