//! Real spherical-harmonic color evaluation, degrees 0..=3.
//!
//! Basis ordering and signs follow the de facto 3D GS coefficient
//! convention so third-party assets load with correct colors: degree 0,
//! then (-y, z, -x) for degree 1, then the five degree-2 and seven
//! degree-3 polynomials. Channel color is `0.5 + sum(basis_i * coeff_i)`,
//! clamped to `[0, 1]`.

use nalgebra::Vector3;

pub const C0: f64 = 0.28209479177387814;
pub const C1: f64 = 0.4886025119029199;
pub const C2: [f64; 5] = [
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
];
pub const C3: [f64; 7] = [
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
];

/// SH degree for a coefficient count of `(L+1)^2`, if any.
pub fn degree_for_coeff_count(n: usize) -> Option<usize> {
    match n {
        1 => Some(0),
        4 => Some(1),
        9 => Some(2),
        16 => Some(3),
        _ => None,
    }
}

/// Degree-0 coefficient reproducing `rgb` exactly after the +0.5 offset.
pub fn dc_from_rgb(rgb: [f64; 3]) -> [f64; 3] {
    [
        (rgb[0] - 0.5) / C0,
        (rgb[1] - 0.5) / C0,
        (rgb[2] - 0.5) / C0,
    ]
}

/// Evaluates the basis at a unit direction; entries past the requested
/// degree are left zero.
pub fn basis(dir: &Vector3<f64>, degree: usize) -> [f64; 16] {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let mut b = [0.0f64; 16];
    b[0] = C0;
    if degree >= 1 {
        b[1] = -C1 * y;
        b[2] = C1 * z;
        b[3] = -C1 * x;
    }
    if degree >= 2 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        b[4] = C2[0] * x * y;
        b[5] = C2[1] * y * z;
        b[6] = C2[2] * (2.0 * zz - xx - yy);
        b[7] = C2[3] * x * z;
        b[8] = C2[4] * (xx - yy);
        if degree >= 3 {
            b[9] = C3[0] * y * (3.0 * xx - yy);
            b[10] = C3[1] * x * y * z;
            b[11] = C3[2] * y * (4.0 * zz - xx - yy);
            b[12] = C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
            b[13] = C3[4] * x * (4.0 * zz - xx - yy);
            b[14] = C3[5] * z * (xx - yy);
            b[15] = C3[6] * x * (xx - 3.0 * yy);
        }
    }
    b
}

/// View-dependent color of a coefficient set at a unit view direction.
pub fn eval_color(sh: &[[f64; 3]], view_dir: &Vector3<f64>) -> [f64; 3] {
    let degree = degree_for_coeff_count(sh.len())
        .expect("coefficient count validated at construction");
    let b = basis(view_dir, degree);
    let mut rgb = [0.5f64; 3];
    for (i, coeff) in sh.iter().enumerate() {
        for c in 0..3 {
            rgb[c] += b[i] * coeff[c];
        }
    }
    for c in &mut rgb {
        *c = c.clamp(0.0, 1.0);
    }
    rgb
}
