//! Training-pair construction and the synthetic-scene substrate.
//!
//! Two pair flavors, both supervised by real frames: NVS pairs project
//! points from neighboring frames into a target frame (the render shows
//! exactly the holes and sparsity the generator must repair), and
//! insertion pairs remove the points of an observed object and splat a
//! reconstructed asset into its box (the original frame, containing the
//! real object, is the supervision).

pub mod manifest;
pub mod pairio;
pub mod synth;

use ndarray::{s, Array1, Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::OnceLock;

use crate::conditioning::{render_joint, ConditioningBundle, Trajectory};
use crate::geometry::{unproject, ColorPointCloud, Frame, OrientedBox3D};
use crate::splat::{align_asset, Gaussian3D, GaussianAsset};
use crate::{Error, Result};

/// Neighbor window half-width for NVS pair construction.
pub const NEIGHBOR_WINDOW: usize = 8;
/// Default number of projected neighbor frames.
pub const DEFAULT_NEIGHBOR_COUNT: usize = 4;
/// Box dilation applied when removing an observed object's points; depth
/// noise leaves halo points just outside the tight box.
pub const REMOVAL_DILATION: f64 = 1.1;
/// Default per-axis tolerance for bbox-based asset filtering.
pub const DEFAULT_FILTER_TOL: f64 = 0.15;
/// Length of the first-frame embedding vector.
pub const EMBED_DIM: usize = 512;

/// An asset bound to a scene with its per-frame box placements.
#[derive(Debug, Clone)]
pub struct SceneAsset {
    pub id: String,
    pub asset: GaussianAsset,
    /// `(frame index, world box)` pairs.
    pub placements: Vec<(usize, OrientedBox3D)>,
}

impl SceneAsset {
    pub fn placement_at(&self, frame: usize) -> Option<&OrientedBox3D> {
        self.placements
            .iter()
            .find(|(f, _)| *f == frame)
            .map(|(_, b)| b)
    }
}

/// One recorded segment: ordered frames plus the assets placed in them.
#[derive(Debug, Clone)]
pub struct Scene {
    pub frames: Vec<Frame>,
    pub assets: Vec<SceneAsset>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::invalid("scene", "must contain at least one frame"));
        }
        for f in &self.frames {
            f.validate()?;
        }
        for a in &self.assets {
            a.asset.validate()?;
            for (frame, b) in &a.placements {
                if *frame >= self.frames.len() {
                    return Err(Error::invalid(
                        "scene",
                        format!("placement of '{}' references frame {frame} of {}", a.id, self.frames.len()),
                    ));
                }
                b.validate()?;
            }
        }
        Ok(())
    }

    /// World-aligned splat lists for every asset placed at `frame`.
    pub fn aligned_splats_at(&self, frame: usize) -> Result<Vec<Vec<Gaussian3D>>> {
        self.assets
            .iter()
            .filter_map(|a| a.placement_at(frame).map(|b| align_asset(&a.asset, b)))
            .collect()
    }
}

/// A conditioning bundle with its ground-truth target video and the
/// first-frame embedding.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub bundle: ConditioningBundle,
    /// `(T, 3, H, W)` ground truth.
    pub target: Array4<f32>,
    /// Length-512, unit norm.
    pub first_frame_embed: Array1<f64>,
}

impl TrainingPair {
    pub fn validate(&self) -> Result<()> {
        self.bundle.validate()?;
        let (t, c, h, w) = self.target.dim();
        let (bt, _, bh, bw) = self.bundle.i.dim();
        if c != 3 || (t, h, w) != (bt, bh, bw) {
            return Err(Error::shape(
                format!("({bt}, 3, {bh}, {bw})"),
                format!("{:?}", self.target.dim()),
            ));
        }
        if self.first_frame_embed.len() != EMBED_DIM {
            return Err(Error::shape(
                format!("({EMBED_DIM},)"),
                format!("({},)", self.first_frame_embed.len()),
            ));
        }
        Ok(())
    }
}

/// Splitmix-style seed derivation so parallel jobs get independent,
/// schedule-free streams.
pub fn derive_seed(global: u64, parts: &[u64]) -> u64 {
    let mut x = global ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        x ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 30)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
    }
    x
}

/// Draws `k` distinct neighbor indices uniformly without replacement from
/// `[t-8, t+8] \ {t}` clamped to the segment, deterministically in the
/// seed. `k` is clamped to the window size.
pub fn sample_neighbors(t: usize, n_frames: usize, k: usize, rng_seed: u64) -> Result<Vec<usize>> {
    if t >= n_frames {
        return Err(Error::invalid("frame index", format!("{t} >= {n_frames}")));
    }
    if k == 0 || k > 2 * NEIGHBOR_WINDOW {
        return Err(Error::invalid(
            "neighbor count",
            format!("k = {k} outside 1..={}", 2 * NEIGHBOR_WINDOW),
        ));
    }
    let lo = t.saturating_sub(NEIGHBOR_WINDOW);
    let hi = (t + NEIGHBOR_WINDOW).min(n_frames - 1);
    let mut window: Vec<usize> = (lo..=hi).filter(|&i| i != t).collect();
    if window.is_empty() {
        return Err(Error::invalid(
            "neighbor window",
            "empty: a single-frame segment has no neighbors",
        ));
    }
    let k = k.min(window.len());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    // Partial Fisher-Yates: the first k slots end up a uniform draw
    // without replacement.
    for i in 0..k {
        let j = rng.random_range(i..window.len());
        window.swap(i, j);
    }
    window.truncate(k);
    Ok(window)
}

/// Builds an NVS pair: neighbor-frame clouds (never the target's own
/// points) rendered into the target camera together with the target
/// frame's asset splats. The target image is the supervision.
pub fn build_nvs_pair(scene: &Scene, t: usize, neighbors: &[usize]) -> Result<TrainingPair> {
    if t >= scene.frames.len() {
        return Err(Error::invalid("frame index", format!("{t} >= {}", scene.frames.len())));
    }
    if neighbors.is_empty() {
        return Err(Error::invalid("neighbors", "empty neighbor list"));
    }
    for &n in neighbors {
        if n >= scene.frames.len() {
            return Err(Error::invalid("neighbors", format!("index {n} out of range")));
        }
        if n == t {
            return Err(Error::invalid("neighbors", "target frame cannot be its own neighbor"));
        }
    }

    let mut cloud = ColorPointCloud::default();
    for &n in neighbors {
        let mut c = unproject(&scene.frames[n]);
        c.source_frame = Some(n);
        cloud.extend(&c);
    }

    let frame = &scene.frames[t];
    let splats = scene.aligned_splats_at(t)?;
    let traj = Trajectory::new(vec![(frame.intrinsics, frame.pose)])?;
    let bundle = render_joint(&cloud, &splats, &traj)?;

    let pair = TrainingPair {
        bundle,
        target: frame_to_target(frame),
        first_frame_embed: embed_first_frame(&frame.image),
    };
    pair.validate()?;
    Ok(pair)
}

/// Builds an insertion pair for `scene.assets[asset_index]` at `frame_t`:
/// the frame's own points inside the (10% dilated) placement box are
/// removed, the asset is splatted into the box, and the unmodified frame
/// image — containing the real object — is the supervision.
pub fn build_insertion_pair(scene: &Scene, asset_index: usize, frame_t: usize) -> Result<TrainingPair> {
    if frame_t >= scene.frames.len() {
        return Err(Error::invalid("frame index", format!("{frame_t} >= {}", scene.frames.len())));
    }
    let sa = scene
        .assets
        .get(asset_index)
        .ok_or_else(|| Error::invalid("asset index", format!("{asset_index} out of range")))?;
    let target_box = sa.placement_at(frame_t).ok_or_else(|| {
        Error::invalid(
            "placement",
            format!("asset '{}' has no box at frame {frame_t}", sa.id),
        )
    })?;

    let frame = &scene.frames[frame_t];
    let cloud = remove_asset_points(&unproject(frame), target_box, REMOVAL_DILATION);

    let splats = align_asset(&sa.asset, target_box)?;
    let traj = Trajectory::new(vec![(frame.intrinsics, frame.pose)])?;
    let bundle = render_joint(&cloud, &[splats], &traj)?;

    let pair = TrainingPair {
        bundle,
        target: frame_to_target(frame),
        first_frame_embed: embed_first_frame(&frame.image),
    };
    pair.validate()?;
    Ok(pair)
}

/// Drops every point inside the dilated box. Exposed so the removal can
/// be audited independently of pair construction.
pub fn remove_asset_points(
    cloud: &ColorPointCloud,
    target_box: &OrientedBox3D,
    dilation: f64,
) -> ColorPointCloud {
    let mut out = cloud.clone();
    out.retain(|p| !target_box.contains_dilated(p, dilation));
    out
}

fn frame_to_target(frame: &Frame) -> Array4<f32> {
    let (c, h, w) = frame.image.dim();
    let mut t = Array4::<f32>::zeros((1, c, h, w));
    t.slice_mut(s![0, .., .., ..]).assign(&frame.image);
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Accept,
    Reject,
}

/// Accepts a reconstructed asset iff every axis of its dims lies within
/// `tol` relative deviation of the observed object dims.
pub fn filter_asset_bbox(
    asset_dims: [f64; 3],
    original_dims: [f64; 3],
    tol: f64,
) -> Result<FilterDecision> {
    if !original_dims.iter().all(|&d| d > 0.0) {
        return Err(Error::invalid(
            "original dims",
            format!("{original_dims:?} must be positive"),
        ));
    }
    if !(0.0..=10.0).contains(&tol) {
        return Err(Error::invalid("tolerance", format!("{tol} out of range")));
    }
    let ok = asset_dims
        .iter()
        .zip(&original_dims)
        .all(|(a, o)| ((a - o) / o).abs() <= tol);
    Ok(if ok {
        FilterDecision::Accept
    } else {
        FilterDecision::Reject
    })
}

const EMBED_INPUT: usize = 32 * 32 + 1; // grayscale thumbnail + bias
const EMBED_SEED: u64 = 0x5C7A_17E5;

fn embed_matrix() -> &'static Vec<f64> {
    static MATRIX: OnceLock<Vec<f64>> = OnceLock::new();
    MATRIX.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(EMBED_SEED);
        (0..EMBED_DIM * EMBED_INPUT)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect()
    })
}

/// Deterministic stand-in for an image-encoder condition: a fixed seeded
/// random projection of the 32x32-downsampled grayscale image, with a bias
/// column, L2-normalized. Always unit norm; identical images map to
/// identical vectors.
pub fn embed_first_frame(image: &Array3<f32>) -> Array1<f64> {
    let (_, h, w) = image.dim();
    let mut input = [0f64; EMBED_INPUT];
    for by in 0..32 {
        for bx in 0..32 {
            // Integer block bounds; for small images blocks collapse to
            // single pixels.
            let y0 = by * h / 32;
            let y1 = ((by + 1) * h / 32).max(y0 + 1).min(h);
            let x0 = bx * w / 32;
            let x1 = ((bx + 1) * w / 32).max(x0 + 1).min(w);
            let mut acc = 0.0f64;
            let mut count = 0.0f64;
            for y in y0..y1 {
                for x in x0..x1 {
                    let gray = (image[(0, y, x)] + image[(1, y, x)] + image[(2, y, x)]) / 3.0;
                    acc += gray as f64;
                    count += 1.0;
                }
            }
            input[by * 32 + bx] = acc / count;
        }
    }
    input[EMBED_INPUT - 1] = 1.0;

    let m = embed_matrix();
    let mut out = Array1::<f64>::zeros(EMBED_DIM);
    for r in 0..EMBED_DIM {
        let row = &m[r * EMBED_INPUT..(r + 1) * EMBED_INPUT];
        out[r] = row.iter().zip(&input).map(|(a, b)| a * b).sum();
    }
    let norm = out.dot(&out).sqrt();
    if norm > 1e-12 {
        out / norm
    } else {
        // Degenerate cancellation; fall back to the normalized bias column.
        let mut bias = Array1::<f64>::zeros(EMBED_DIM);
        for r in 0..EMBED_DIM {
            bias[r] = m[r * EMBED_INPUT + EMBED_INPUT - 1];
        }
        let n = bias.dot(&bias).sqrt();
        bias / n
    }
}

/// Convenience for tests that need an arbitrary deterministic image.
pub fn random_image(h: usize, w: usize, seed: u64) -> Array3<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f32> = (0..3 * h * w).map(|_| rng.random::<f32>()).collect();
    Array3::from_shape_vec((3, h, w), data).expect("shape matches data length")
}
