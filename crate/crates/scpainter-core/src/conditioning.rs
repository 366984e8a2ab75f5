//! Joint point + splat rendering into camera trajectories and assembly of
//! the conditioning tensors.
//!
//! Per trajectory frame the bundle holds the rendered image `I`, the
//! coverage mask (1 = the pixel received projected points or asset splat;
//! the complement of a hole mask), and the asset mask `M_a` as continuous
//! splat alpha plus a 0.5-thresholded binary copy. Masks are stored in
//! coverage polarity everywhere, including on disk, where `bundle.json`
//! records `"polarity": "coverage"`.

use std::path::Path;

use ndarray::{s, Array2, Array4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{project_points, CameraIntrinsics, ColorPointCloud, RigidPose};
use crate::splat::{rasterize, Gaussian3D, DEFAULT_TILE_SIZE};
use crate::{imageio, tensor, Error, Result};

/// Splat alpha at or above this threshold counts as asset-covered in the
/// binary mask and in the point/splat depth merge.
pub const ASSET_ALPHA_THRESHOLD: f64 = 0.5;

/// Spatial downsampling factor between image pixels and latent cells.
pub const LATENT_FACTOR: usize = 8;

/// An ordered list of cameras to render into. All entries share one
/// image size.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub cameras: Vec<(CameraIntrinsics, RigidPose)>,
}

impl Trajectory {
    pub fn new(cameras: Vec<(CameraIntrinsics, RigidPose)>) -> Result<Self> {
        let traj = Trajectory { cameras };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cameras.is_empty() {
            return Err(Error::invalid("trajectory", "must contain at least one camera"));
        }
        let (w, h) = (self.cameras[0].0.width, self.cameras[0].0.height);
        for (k, pose) in &self.cameras {
            k.validate()?;
            pose.validate()?;
            if k.width != w || k.height != h {
                return Err(Error::invalid(
                    "trajectory",
                    format!("mixed image sizes: {}x{} vs {w}x{h}", k.width, k.height),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn width(&self) -> usize {
        self.cameras[0].0.width
    }

    pub fn height(&self) -> usize {
        self.cameras[0].0.height
    }
}

/// Per-trajectory conditioning tensors.
#[derive(Debug, Clone)]
pub struct ConditioningBundle {
    /// `(T, 3, H, W)` rendered RGB in `[0, 1]`.
    pub i: Array4<f32>,
    /// `(T, 1, H, W)` binary; 1 where points or asset splat landed.
    pub coverage: Array4<f32>,
    /// `(T, 1, H, W)` continuous splat alpha in `[0, 1]`.
    pub ma: Array4<f32>,
    /// `(T, 1, H, W)` binary `ma >= 0.5`.
    pub ma_binary: Array4<f32>,
    pub cameras: Trajectory,
}

impl ConditioningBundle {
    pub fn t(&self) -> usize {
        self.i.dim().0
    }

    pub fn validate(&self) -> Result<()> {
        let (t, _, h, w) = self.i.dim();
        let mask_dim = (t, 1, h, w);
        if self.i.dim().1 != 3 {
            return Err(Error::shape("(T, 3, H, W)", format!("{:?}", self.i.dim())));
        }
        for (name, m) in [
            ("coverage", &self.coverage),
            ("ma", &self.ma),
            ("ma_binary", &self.ma_binary),
        ] {
            if m.dim() != mask_dim {
                return Err(Error::shape(format!("{mask_dim:?} for {name}"), format!("{:?}", m.dim())));
            }
        }
        if self.cameras.len() != t {
            return Err(Error::invalid("bundle", "camera count differs from T"));
        }
        if !self.i.iter().all(|v| v.is_finite()) {
            return Err(Error::Invariant("non-finite values in rendered video".into()));
        }
        // Every asset pixel counts as covered.
        for (mb, cov) in self.ma_binary.iter().zip(self.coverage.iter()) {
            if *mb > 0.5 && *cov < 0.5 {
                return Err(Error::Invariant("asset mask not contained in coverage".into()));
            }
        }
        Ok(())
    }
}

/// `(T, C, h, w)` latent video with `h = H/8`, `w = W/8`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTensor {
    pub data: Array4<f64>,
}

impl LatentTensor {
    pub fn new(data: Array4<f64>) -> Result<Self> {
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("latent", "non-finite values"));
        }
        Ok(LatentTensor { data })
    }

    pub fn dim(&self) -> (usize, usize, usize, usize) {
        self.data.dim()
    }
}

/// Renders the cloud and the (already world-aligned) asset splats into
/// every trajectory camera and assembles the bundle.
///
/// Per pixel the splat layer wins where its alpha reaches 0.5 and its
/// mean depth is nearer than the point z-buffer; the splat color is then
/// composited over the point color with the splat alpha as weight.
/// Everywhere else the projected point color stands. Frames render in
/// parallel and join in order.
pub fn render_joint(
    cloud: &ColorPointCloud,
    assets: &[Vec<Gaussian3D>],
    traj: &Trajectory,
) -> Result<ConditioningBundle> {
    traj.validate()?;
    let (t_len, h, w) = (traj.len(), traj.height(), traj.width());
    let all_splats: Vec<Gaussian3D> = assets.iter().flatten().cloned().collect();
    for g in &all_splats {
        g.validate()?;
    }

    struct FrameOut {
        rgb: Array2<[f32; 3]>,
        coverage: Array2<f32>,
        ma: Array2<f32>,
    }

    let frames: Vec<FrameOut> = traj
        .cameras
        .par_iter()
        .map(|(k, pose)| {
            let splat = rasterize(&all_splats, k, pose, DEFAULT_TILE_SIZE);
            let points = project_points(cloud, k, pose);
            let mut rgb = Array2::from_elem((h, w), [0f32; 3]);
            let mut coverage = Array2::<f32>::zeros((h, w));
            let mut ma = Array2::<f32>::zeros((h, w));
            for v in 0..h {
                for u in 0..w {
                    let alpha = splat.alpha[(v, u)];
                    // Threshold the f32 value that the bundle stores, so
                    // coverage and the binary mask can never disagree at
                    // the rounding boundary.
                    let alpha_stored = alpha as f32;
                    let asset_on = alpha_stored as f64 >= ASSET_ALPHA_THRESHOLD;
                    let splat_wins = asset_on && splat.depth[(v, u)] < points.zbuf[(v, u)];
                    let px = if splat_wins {
                        [
                            (splat.rgb[(0, v, u)] + (1.0 - alpha) * points.rgb[(0, v, u)] as f64) as f32,
                            (splat.rgb[(1, v, u)] + (1.0 - alpha) * points.rgb[(1, v, u)] as f64) as f32,
                            (splat.rgb[(2, v, u)] + (1.0 - alpha) * points.rgb[(2, v, u)] as f64) as f32,
                        ]
                    } else {
                        [
                            points.rgb[(0, v, u)],
                            points.rgb[(1, v, u)],
                            points.rgb[(2, v, u)],
                        ]
                    };
                    rgb[(v, u)] = px;
                    coverage[(v, u)] = if points.coverage[(v, u)] > 0.0 || asset_on {
                        1.0
                    } else {
                        0.0
                    };
                    ma[(v, u)] = alpha_stored;
                }
            }
            FrameOut { rgb, coverage, ma }
        })
        .collect();

    let mut i = Array4::<f32>::zeros((t_len, 3, h, w));
    let mut coverage = Array4::<f32>::zeros((t_len, 1, h, w));
    let mut ma = Array4::<f32>::zeros((t_len, 1, h, w));
    let mut ma_binary = Array4::<f32>::zeros((t_len, 1, h, w));
    for (t, f) in frames.into_iter().enumerate() {
        for v in 0..h {
            for u in 0..w {
                let px = f.rgb[(v, u)];
                for c in 0..3 {
                    i[(t, c, v, u)] = px[c];
                }
                coverage[(t, 0, v, u)] = f.coverage[(v, u)];
                ma[(t, 0, v, u)] = f.ma[(v, u)];
                ma_binary[(t, 0, v, u)] = if f.ma[(v, u)] as f64 >= ASSET_ALPHA_THRESHOLD {
                    1.0
                } else {
                    0.0
                };
            }
        }
    }

    let bundle = ConditioningBundle {
        i,
        coverage,
        ma,
        ma_binary,
        cameras: traj.clone(),
    };
    bundle.validate()?;
    Ok(bundle)
}

/// Pixelwise OR of two binary masks of identical shape.
pub fn composite_masks(coverage: &Array4<f32>, ma_binary: &Array4<f32>) -> Result<Array4<f32>> {
    if coverage.dim() != ma_binary.dim() {
        return Err(Error::shape(
            format!("{:?}", coverage.dim()),
            format!("{:?}", ma_binary.dim()),
        ));
    }
    let mut out = coverage.clone();
    out.zip_mut_with(ma_binary, |a, b| {
        if *b > 0.5 {
            *a = 1.0;
        }
    });
    Ok(out)
}

/// 8x8 max-pool: a latent cell is on iff any pixel of its block is on.
/// Keeps every covered pixel represented at latent resolution, which is
/// the conservative choice for conditioning.
pub fn downsample_mask(mask: &Array4<f32>) -> Result<Array4<f32>> {
    let (t, c, h, w) = mask.dim();
    if c != 1 {
        return Err(Error::shape("(T, 1, H, W)", format!("{:?}", mask.dim())));
    }
    if h % LATENT_FACTOR != 0 || w % LATENT_FACTOR != 0 {
        return Err(Error::invalid(
            "mask",
            format!("{h}x{w} not divisible by {LATENT_FACTOR}"),
        ));
    }
    let (lh, lw) = (h / LATENT_FACTOR, w / LATENT_FACTOR);
    let mut out = Array4::<f32>::zeros((t, 1, lh, lw));
    for ti in 0..t {
        for lv in 0..lh {
            for lu in 0..lw {
                let block = mask.slice(s![
                    ti,
                    0,
                    lv * LATENT_FACTOR..(lv + 1) * LATENT_FACTOR,
                    lu * LATENT_FACTOR..(lu + 1) * LATENT_FACTOR
                ]);
                if block.iter().any(|&v| v > 0.5) {
                    out[(ti, 0, lv, lu)] = 1.0;
                }
            }
        }
    }
    Ok(out)
}

/// Elementwise multiply, mask broadcast over the channel dimension.
/// Cells with mask 0 become exactly 0.
pub fn mask_latent(z: &LatentTensor, mask_lat: &Array4<f32>) -> Result<LatentTensor> {
    let (t, c, h, w) = z.dim();
    if mask_lat.dim() != (t, 1, h, w) {
        return Err(Error::shape(
            format!("({t}, 1, {h}, {w})"),
            format!("{:?}", mask_lat.dim()),
        ));
    }
    let mut out = z.data.clone();
    for ti in 0..t {
        for ci in 0..c {
            for v in 0..h {
                for u in 0..w {
                    out[(ti, ci, v, u)] *= mask_lat[(ti, 0, v, u)] as f64;
                }
            }
        }
    }
    LatentTensor::new(out)
}

/// Channel concatenation `(T, 3, H, W) ++ (T, 1, H, W) -> (T, 4, H, W)`;
/// image channels 0-2, asset mask channel 3.
pub fn assemble_encoder_input(i: &Array4<f32>, ma: &Array4<f32>) -> Result<Array4<f32>> {
    let (t, c, h, w) = i.dim();
    if c != 3 {
        return Err(Error::shape("(T, 3, H, W)", format!("{:?}", i.dim())));
    }
    if ma.dim() != (t, 1, h, w) {
        return Err(Error::shape(
            format!("({t}, 1, {h}, {w})"),
            format!("{:?}", ma.dim()),
        ));
    }
    let mut out = Array4::<f32>::zeros((t, 4, h, w));
    out.slice_mut(s![.., 0..3, .., ..]).assign(i);
    out.slice_mut(s![.., 3..4, .., ..]).assign(ma);
    Ok(out)
}

/// Channel concatenation of the masked conditioning latent (first) with
/// the noisy target latent (second). The order is fixed.
pub fn assemble_diffusion_input(
    z_masked: &LatentTensor,
    z_noisy: &LatentTensor,
) -> Result<LatentTensor> {
    let (t, cm, h, w) = z_masked.dim();
    let (t2, cn, h2, w2) = z_noisy.dim();
    if (t, h, w) != (t2, h2, w2) {
        return Err(Error::shape(
            format!("({t}, *, {h}, {w})"),
            format!("({t2}, *, {h2}, {w2})"),
        ));
    }
    let mut out = Array4::<f64>::zeros((t, cm + cn, h, w));
    out.slice_mut(s![.., 0..cm, .., ..]).assign(&z_masked.data);
    out.slice_mut(s![.., cm..cm + cn, .., ..]).assign(&z_noisy.data);
    LatentTensor::new(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct CameraDto {
    intrinsics: CameraIntrinsics,
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleManifest {
    t: usize,
    width: usize,
    height: usize,
    /// Always "coverage": masks mark received content, not holes.
    polarity: String,
    cameras: Vec<CameraDto>,
}

/// Writes `I_%04d.png`, `cov_%04d.scpt`, `ma_%04d.scpt`, and
/// `bundle.json` into `dir` (created if missing).
pub fn save_bundle(dir: impl AsRef<Path>, bundle: &ConditioningBundle) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (t_len, _, h, w) = bundle.i.dim();
    for t in 0..t_len {
        let img = bundle.i.slice(s![t, .., .., ..]).to_owned();
        imageio::save_rgb(dir.join(format!("I_{t:04}.png")), &img)?;
        let cov = bundle.coverage.slice(s![t, 0, .., ..]).to_owned();
        tensor::write_tensor(dir.join(format!("cov_{t:04}.scpt")), cov.view().into_dyn())?;
        let ma = bundle.ma.slice(s![t, 0, .., ..]).to_owned();
        tensor::write_tensor(dir.join(format!("ma_{t:04}.scpt")), ma.view().into_dyn())?;
    }
    let manifest = BundleManifest {
        t: t_len,
        width: w,
        height: h,
        polarity: "coverage".to_string(),
        cameras: bundle
            .cameras
            .cameras
            .iter()
            .map(|(k, pose)| {
                let (rotation, translation) = pose.to_arrays();
                CameraDto {
                    intrinsics: *k,
                    rotation,
                    translation,
                }
            })
            .collect(),
    };
    let path = dir.join("bundle.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::malformed(&path, e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Loads a bundle directory written by [`save_bundle`]. The binary asset
/// mask is re-derived by thresholding the stored continuous alpha.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<ConditioningBundle> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("bundle.json");
    let manifest: BundleManifest = serde_json::from_str(
        &std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?,
    )
    .map_err(|e| Error::malformed(&manifest_path, e.to_string()))?;
    if manifest.polarity != "coverage" {
        return Err(Error::malformed(
            &manifest_path,
            format!("unsupported mask polarity '{}'", manifest.polarity),
        ));
    }
    let (t_len, h, w) = (manifest.t, manifest.height, manifest.width);
    let mut i = Array4::<f32>::zeros((t_len, 3, h, w));
    let mut coverage = Array4::<f32>::zeros((t_len, 1, h, w));
    let mut ma = Array4::<f32>::zeros((t_len, 1, h, w));
    let mut ma_binary = Array4::<f32>::zeros((t_len, 1, h, w));
    for t in 0..t_len {
        let img = imageio::load_rgb(dir.join(format!("I_{t:04}.png")))?;
        if img.dim() != (3, h, w) {
            return Err(Error::shape(format!("(3, {h}, {w})"), format!("{:?}", img.dim())));
        }
        i.slice_mut(s![t, .., .., ..]).assign(&img);
        let cov = tensor::read_tensor2(dir.join(format!("cov_{t:04}.scpt")))?;
        let ma_t = tensor::read_tensor2(dir.join(format!("ma_{t:04}.scpt")))?;
        if cov.dim() != (h, w) || ma_t.dim() != (h, w) {
            return Err(Error::shape(format!("({h}, {w})"), "mask tensor".to_string()));
        }
        coverage.slice_mut(s![t, 0, .., ..]).assign(&cov);
        ma.slice_mut(s![t, 0, .., ..]).assign(&ma_t);
        for v in 0..h {
            for u in 0..w {
                ma_binary[(t, 0, v, u)] = if ma_t[(v, u)] as f64 >= ASSET_ALPHA_THRESHOLD {
                    1.0
                } else {
                    0.0
                };
            }
        }
    }
    let cameras = Trajectory::new(
        manifest
            .cameras
            .iter()
            .map(|c| {
                c.intrinsics.validate()?;
                Ok((c.intrinsics, RigidPose::from_arrays(c.rotation, c.translation)?))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let bundle = ConditioningBundle {
        i,
        coverage,
        ma,
        ma_binary,
        cameras,
    };
    bundle.validate()?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::Gaussian3D;
    use nalgebra::Vector3;
    use ndarray::Array4;

    fn camera() -> CameraIntrinsics {
        CameraIntrinsics::new(60.0, 60.0, 16.5, 16.5, 32, 32).unwrap()
    }

    fn one_camera_traj() -> Trajectory {
        Trajectory::new(vec![(camera(), RigidPose::identity())]).unwrap()
    }

    #[test]
    fn trajectory_rejects_mixed_sizes() {
        let a = CameraIntrinsics::new(10.0, 10.0, 4.0, 4.0, 8, 8).unwrap();
        let b = CameraIntrinsics::new(10.0, 10.0, 4.0, 4.0, 16, 8).unwrap();
        assert!(Trajectory::new(vec![
            (a, RigidPose::identity()),
            (b, RigidPose::identity())
        ])
        .is_err());
        assert!(Trajectory::new(vec![]).is_err());
    }

    #[test]
    fn assets_only_render_is_splat_render() {
        let g = Gaussian3D::isotropic(Vector3::new(0.0, 0.0, 3.0), 0.15, 0.95, [0.9, 0.1, 0.1]);
        let traj = one_camera_traj();
        let bundle = render_joint(&ColorPointCloud::default(), &[vec![g]], &traj).unwrap();
        // Coverage equals the binary asset mask when there are no points.
        assert_eq!(bundle.coverage, bundle.ma_binary);
        assert!(bundle.ma[(0, 0, 16, 16)] > 0.9);
        assert!(bundle.i[(0, 0, 16, 16)] > 0.5);
    }

    #[test]
    fn splat_in_front_of_point_wins_and_behind_loses() {
        let traj = one_camera_traj();
        // A point on the optical axis at 5 m, red.
        let cloud = ColorPointCloud {
            positions: vec![Vector3::new(0.0, 0.0, 5.0)],
            colors: vec![[1.0, 0.0, 0.0]],
            source_frame: None,
        };
        // Nearly opaque green splat in front of it.
        let front = Gaussian3D::isotropic(Vector3::new(0.0, 0.0, 2.0), 0.1, 0.99, [0.0, 1.0, 0.0]);
        let bundle = render_joint(&cloud, &[vec![front]], &traj).unwrap();
        assert!(bundle.i[(0, 1, 16, 16)] > 0.8, "splat should win");

        // Same splat moved behind the point: the point color stands.
        let back = Gaussian3D::isotropic(Vector3::new(0.0, 0.0, 8.0), 0.1, 0.99, [0.0, 1.0, 0.0]);
        let bundle = render_joint(&cloud, &[vec![back]], &traj).unwrap();
        assert!(bundle.i[(0, 0, 16, 16)] > 0.9, "point should win");
        assert!(bundle.i[(0, 1, 16, 16)] < 0.2);
    }

    #[test]
    fn composite_masks_is_pixelwise_or() {
        let mut a = Array4::<f32>::zeros((1, 1, 8, 8));
        let mut b = Array4::<f32>::zeros((1, 1, 8, 8));
        a[(0, 0, 1, 1)] = 1.0;
        b[(0, 0, 2, 2)] = 1.0;
        let c = composite_masks(&a, &b).unwrap();
        assert_eq!(c[(0, 0, 1, 1)], 1.0);
        assert_eq!(c[(0, 0, 2, 2)], 1.0);
        assert_eq!(c.sum(), 2.0);
        assert_eq!(composite_masks(&a, &a).unwrap(), a);

        let wrong = Array4::<f32>::zeros((1, 1, 8, 16));
        assert!(composite_masks(&a, &wrong).is_err());
    }

    #[test]
    fn downsample_mask_is_blockwise_any() {
        let mut m = Array4::<f32>::zeros((1, 1, 16, 16));
        m[(0, 0, 3, 11)] = 1.0; // block (0, 1)
        let d = downsample_mask(&m).unwrap();
        assert_eq!(d.dim(), (1, 1, 2, 2));
        assert_eq!(d[(0, 0, 0, 1)], 1.0);
        assert_eq!(d.sum(), 1.0);

        let ones = Array4::<f32>::ones((1, 1, 16, 16));
        assert_eq!(downsample_mask(&ones).unwrap().sum(), 4.0);
        let zeros = Array4::<f32>::zeros((1, 1, 16, 16));
        assert_eq!(downsample_mask(&zeros).unwrap().sum(), 0.0);
    }

    #[test]
    fn mask_latent_zeroes_and_is_idempotent() {
        let z = LatentTensor::new(Array4::from_shape_fn((1, 2, 2, 2), |(_, c, v, u)| {
            (c + v + u) as f64 + 0.5
        }))
        .unwrap();
        let mut m = Array4::<f32>::zeros((1, 1, 2, 2));
        m[(0, 0, 0, 0)] = 1.0;
        let once = mask_latent(&z, &m).unwrap();
        assert_eq!(once.data[(0, 1, 0, 0)], z.data[(0, 1, 0, 0)]);
        assert_eq!(once.data[(0, 0, 1, 1)], 0.0);
        let twice = mask_latent(&once, &m).unwrap();
        assert_eq!(once, twice);

        let ones = Array4::<f32>::ones((1, 1, 2, 2));
        assert_eq!(mask_latent(&z, &ones).unwrap(), z);
    }

    #[test]
    fn encoder_input_concatenates_channels() {
        let i = Array4::from_shape_fn((2, 3, 8, 8), |(t, c, v, u)| (t + c + v + u) as f32);
        let ma = Array4::from_shape_fn((2, 1, 8, 8), |(t, _, v, u)| (t * v * u) as f32);
        let x = assemble_encoder_input(&i, &ma).unwrap();
        assert_eq!(x.dim(), (2, 4, 8, 8));
        // Slicing recovers both inputs bit-exactly.
        assert_eq!(x.slice(s![.., 0..3, .., ..]), i);
        assert_eq!(x.slice(s![.., 3..4, .., ..]), ma);
    }

    #[test]
    fn diffusion_input_orders_cond_then_noisy() {
        let cond = LatentTensor::new(Array4::from_elem((1, 2, 2, 2), 1.0)).unwrap();
        let noisy = LatentTensor::new(Array4::from_elem((1, 3, 2, 2), 2.0)).unwrap();
        let x = assemble_diffusion_input(&cond, &noisy).unwrap();
        assert_eq!(x.dim(), (1, 5, 2, 2));
        assert_eq!(x.data[(0, 0, 0, 0)], 1.0);
        assert_eq!(x.data[(0, 2, 0, 0)], 2.0);

        let bad = LatentTensor::new(Array4::from_elem((1, 3, 4, 2), 2.0)).unwrap();
        assert!(assemble_diffusion_input(&cond, &bad).is_err());
    }

    #[test]
    fn bundle_roundtrip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let g = Gaussian3D::isotropic(Vector3::new(0.0, 0.0, 3.0), 0.15, 0.9, [0.2, 0.9, 0.3]);
        let cloud = ColorPointCloud {
            positions: vec![Vector3::new(0.3, 0.2, 4.0)],
            colors: vec![[100.0 / 255.0, 0.0, 1.0]],
            source_frame: None,
        };
        let traj = one_camera_traj();
        let bundle = render_joint(&cloud, &[vec![g]], &traj).unwrap();
        save_bundle(dir.path(), &bundle).unwrap();
        let back = load_bundle(dir.path()).unwrap();
        assert_eq!(back.coverage, bundle.coverage);
        assert_eq!(back.ma_binary, bundle.ma_binary);
        assert_eq!(back.ma, bundle.ma);
        assert_eq!(back.cameras.len(), 1);
        // PNG quantizes to the u8 grid.
        for (a, b) in back.i.iter().zip(bundle.i.iter()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-7);
        }
    }
}
