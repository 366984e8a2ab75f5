//! 3D Gaussian primitives and splatting.
//!
//! A scene asset is a list of [`Gaussian3D`] in a canonical object frame
//! plus the canonical box that [`align_asset`] maps onto an observed box
//! placement. Rendering goes through [`project_gaussian`] (EWA projection
//! to screen-space ellipses) and [`rasterize`] (tile-accelerated
//! front-to-back alpha compositing).

mod project;
mod rasterize;
pub mod sh;

pub use project::{project_gaussian, ProjectedGaussian};
pub use rasterize::{rasterize, SplatRender, DEFAULT_TILE_SIZE};


use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::geometry::OrientedBox3D;
use crate::{Error, Result};

/// Opacity contribution clamp per splat, matching reference splatting.
pub const ALPHA_CLAMP: f64 = 0.99;
/// Per-pixel compositing stops once transmittance drops below this.
pub const TRANSMITTANCE_CUTOFF: f64 = 1e-4;
/// Screen-space covariance floor added to every projected splat (px^2).
pub const COV2D_FLOOR: f64 = 0.3;
/// Rejection threshold for anisotropic asset alignment: per-axis scale
/// ratios further apart than this cannot be folded into quaternion-form
/// covariances without shear error.
pub const ALIGN_ANISOTROPY_TOL: f64 = 0.25;

/// One anisotropic 3D Gaussian with spherical-harmonic color.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian3D {
    pub position: Vector3<f64>,
    /// Standard deviations along the local axes, meters (not log-scale).
    pub scale: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
    /// Already activated, in `[0, 1]`.
    pub opacity: f64,
    /// RGB coefficients per SH basis function; length is `(L+1)^2` for
    /// degree `L` in `0..=3`.
    pub sh: Vec<[f64; 3]>,
}

impl Gaussian3D {
    pub fn validate(&self) -> Result<()> {
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("gaussian", "non-finite position"));
        }
        if !(self.scale.x > 0.0 && self.scale.y > 0.0 && self.scale.z > 0.0)
            || !self.scale.iter().all(|v| v.is_finite())
        {
            return Err(Error::invalid("gaussian", format!("scale {:?} not positive", self.scale)));
        }
        if !self.sh.iter().all(|c| c.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("gaussian", "non-finite SH coefficients"));
        }
        if (self.rotation.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("gaussian", "rotation quaternion not unit length"));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(Error::invalid("gaussian", format!("opacity {} outside [0,1]", self.opacity)));
        }
        if !sh::degree_for_coeff_count(self.sh.len()).is_some() {
            return Err(Error::invalid(
                "gaussian",
                format!("{} SH coefficients is not (L+1)^2 for L in 0..=3", self.sh.len()),
            ));
        }
        Ok(())
    }

    /// Isotropic degree-0 helper used by tests and the synthetic generator.
    pub fn isotropic(position: Vector3<f64>, sigma: f64, opacity: f64, rgb: [f64; 3]) -> Self {
        Gaussian3D {
            position,
            scale: Vector3::new(sigma, sigma, sigma),
            rotation: UnitQuaternion::identity(),
            opacity,
            sh: vec![sh::dc_from_rgb(rgb)],
        }
    }
}

/// World-space covariance `R * diag(scale^2) * R^T`.
pub fn covariance_of(g: &Gaussian3D) -> Matrix3<f64> {
    let r = g.rotation.to_rotation_matrix().into_inner();
    let s2 = Matrix3::from_diagonal(&g.scale.component_mul(&g.scale));
    r * s2 * r.transpose()
}

/// View-dependent color of one Gaussian. `view_dir` must be unit length
/// to 1e-6; small drift is renormalized away.
pub fn sh_color(g: &Gaussian3D, view_dir: &Vector3<f64>) -> [f64; 3] {
    debug_assert!(
        (view_dir.norm() - 1.0).abs() < 1e-6,
        "view direction must be normalized"
    );
    let dir = view_dir.normalize();
    sh::eval_color(&g.sh, &dir)
}

/// An insertable object: Gaussians in a canonical frame plus the canonical
/// box that placement targets map onto.
#[derive(Debug, Clone)]
pub struct GaussianAsset {
    pub gaussians: Vec<Gaussian3D>,
    /// Centered at the origin, axis-aligned in the object frame.
    pub canonical_box: OrientedBox3D,
}

impl GaussianAsset {
    pub fn new(gaussians: Vec<Gaussian3D>, canonical_box: OrientedBox3D) -> Result<Self> {
        let asset = GaussianAsset {
            gaussians,
            canonical_box,
        };
        asset.validate()?;
        Ok(asset)
    }

    pub fn validate(&self) -> Result<()> {
        self.canonical_box.validate()?;
        if self.canonical_box.center.norm() > 1e-9 {
            return Err(Error::invalid("asset", "canonical box must be centered at the origin"));
        }
        let bound = self.canonical_box.local_half_extents() * 1.5;
        for (i, g) in self.gaussians.iter().enumerate() {
            g.validate()?;
            let p = g.position;
            if p.x.abs() > bound.x || p.y.abs() > bound.y || p.z.abs() > bound.z {
                return Err(Error::invalid(
                    "asset",
                    format!("gaussian {i} at {p:?} outside 1.5x canonical box"),
                ));
            }
        }
        Ok(())
    }
}

/// Places an asset's Gaussians into a world-frame target box via the
/// similarity transform canonical box -> target: per-axis scale from the
/// dim ratios, rotation composed into the quaternions, translation to the
/// target center. SH coefficients are untouched.
///
/// Rejects targets whose per-axis scale ratios spread more than 25%:
/// quaternion-form covariance cannot absorb strong non-uniform shear.
pub fn align_asset(asset: &GaussianAsset, target: &OrientedBox3D) -> Result<Vec<Gaussian3D>> {
    target.validate()?;
    let (cl, cw, ch) = asset.canonical_box.dims;
    let (tl, tw, th) = target.dims;
    // Per local axis: x = length, y = height, z = width.
    let k = Vector3::new(tl / cl, th / ch, tw / cw);
    let (kmin, kmax) = (k.min(), k.max());
    if kmax / kmin - 1.0 > ALIGN_ANISOTROPY_TOL {
        return Err(Error::DimensionMismatch(format!(
            "per-axis scale ratios {:?} spread more than {:.0}%",
            (k.x, k.y, k.z),
            ALIGN_ANISOTROPY_TOL * 100.0
        )));
    }
    let rot_q = UnitQuaternion::from_matrix(&target.rotation);
    Ok(asset
        .gaussians
        .iter()
        .map(|g| Gaussian3D {
            position: target.rotation * g.position.component_mul(&k) + target.center,
            scale: g.scale.component_mul(&k),
            rotation: rot_q * g.rotation,
            opacity: g.opacity,
            sh: g.sh.clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn covariance_unit_scale_identity_rotation() {
        let g = Gaussian3D::isotropic(Vector3::zeros(), 1.0, 1.0, [0.5; 3]);
        assert_abs_diff_eq!(covariance_of(&g), Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn covariance_axis_aligned_squares_scales() {
        let mut g = Gaussian3D::isotropic(Vector3::zeros(), 1.0, 1.0, [0.5; 3]);
        g.scale = Vector3::new(2.0, 1.0, 1.0);
        let cov = covariance_of(&g);
        assert_abs_diff_eq!(cov, Matrix3::from_diagonal(&Vector3::new(4.0, 1.0, 1.0)), epsilon = 1e-15);
    }

    #[test]
    fn covariance_matches_direct_assembly() {
        // Oracle: assemble R(q) * diag(s^2) * R(q)^T element by element.
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let axis = Vector3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            let q = UnitQuaternion::from_scaled_axis(axis * rng.random_range(0.0..3.0));
            let s = Vector3::new(
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..2.0),
            );
            let g = Gaussian3D {
                position: Vector3::zeros(),
                scale: s,
                rotation: q,
                opacity: 0.5,
                sh: vec![[0.0; 3]],
            };
            let r = q.to_rotation_matrix().into_inner();
            let mut oracle = Matrix3::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    let mut acc = 0.0;
                    for a in 0..3 {
                        acc += r[(i, a)] * s[a] * s[a] * r[(j, a)];
                    }
                    oracle[(i, j)] = acc;
                }
            }
            let cov = covariance_of(&g);
            assert_abs_diff_eq!(cov, oracle, epsilon = 1e-9);
            // Symmetric positive-definite: symmetry plus positive pivots.
            assert_abs_diff_eq!(cov, cov.transpose(), epsilon = 1e-12);
            assert!(cov.determinant() > 0.0 && cov[(0, 0)] > 0.0);
        }
    }

    fn test_asset() -> GaussianAsset {
        let mut rng = StdRng::seed_from_u64(3);
        let dims = (4.0, 2.0, 1.6);
        let gaussians = (0..12)
            .map(|_| {
                let p = Vector3::new(
                    rng.random_range(-1.8..1.8),
                    rng.random_range(-0.7..0.7),
                    rng.random_range(-0.9..0.9),
                );
                let mut g = Gaussian3D::isotropic(p, rng.random_range(0.05..0.2), 0.8, [0.3, 0.6, 0.9]);
                g.rotation = UnitQuaternion::from_scaled_axis(Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ));
                g
            })
            .collect();
        GaussianAsset::new(gaussians, OrientedBox3D::canonical(dims).unwrap()).unwrap()
    }

    #[test]
    fn align_to_canonical_box_is_identity() {
        let asset = test_asset();
        let aligned = align_asset(&asset, &asset.canonical_box).unwrap();
        for (a, b) in aligned.iter().zip(&asset.gaussians) {
            assert_abs_diff_eq!(a.position, b.position, epsilon = 1e-12);
            assert_abs_diff_eq!(a.scale, b.scale, epsilon = 1e-12);
            assert!(a.rotation.angle_to(&b.rotation) < 1e-9);
        }
    }

    #[test]
    fn align_pure_translation_shifts_positions() {
        let asset = test_asset();
        let t = Vector3::new(10.0, -2.0, 5.0);
        let target = OrientedBox3D::new(t, asset.canonical_box.dims, Matrix3::identity()).unwrap();
        let aligned = align_asset(&asset, &target).unwrap();
        for (a, b) in aligned.iter().zip(&asset.gaussians) {
            assert_abs_diff_eq!(a.position, b.position + t, epsilon = 1e-12);
            assert_abs_diff_eq!(a.scale, b.scale, epsilon = 1e-12);
        }
    }

    #[test]
    fn align_rotation_matches_matrix_transform_oracle() {
        // 90 degree yaw, same dims: covariances must transform as
        // R * Sigma * R^T applied directly.
        let asset = test_asset();
        let rot = crate::geometry::heading_rotation(std::f64::consts::FRAC_PI_2);
        let target =
            OrientedBox3D::new(Vector3::new(1.0, 2.0, 3.0), asset.canonical_box.dims, rot).unwrap();
        let aligned = align_asset(&asset, &target).unwrap();
        for (a, b) in aligned.iter().zip(&asset.gaussians) {
            let expected_pos = rot * b.position + target.center;
            assert_abs_diff_eq!(a.position, expected_pos, epsilon = 1e-12);
            let expected_cov = rot * covariance_of(b) * rot.transpose();
            assert_abs_diff_eq!(covariance_of(a), expected_cov, epsilon = 1e-9);
        }
    }

    #[test]
    fn align_rejects_strong_anisotropy() {
        let asset = test_asset();
        let (l, w, h) = asset.canonical_box.dims;
        let target = OrientedBox3D::canonical((l * 1.3, w, h)).unwrap();
        assert!(matches!(
            align_asset(&asset, &target),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn asset_rejects_gaussian_outside_canonical_bound() {
        let g = Gaussian3D::isotropic(Vector3::new(5.0, 0.0, 0.0), 0.1, 0.5, [0.5; 3]);
        let r = GaussianAsset::new(vec![g], OrientedBox3D::canonical((2.0, 2.0, 2.0)).unwrap());
        assert!(r.is_err());
    }
}
