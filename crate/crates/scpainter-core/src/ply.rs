//! Binary little-endian PLY for point clouds and Gaussian assets.
//!
//! Point clouds carry `x,y,z` (float32) and `red,green,blue` (uint8).
//! Assets carry `x,y,z`, `scale_0..2` (plain standard deviations, not
//! log-scale), `rot_0..3` (quaternion, wxyz), `opacity` (already in
//! `[0,1]`), `f_dc_0..2` and `f_rest_*` SH coefficients laid out
//! channel-major (all R rest terms, then G, then B). Reference-convention
//! exports (log-scale, logit-opacity) load via
//! [`AssetConvention::Reference`]. The canonical box lives in a sidecar
//! JSON next to the PLY: `{"dims": [l, w, h], "center": [0, 0, 0]}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{ColorPointCloud, OrientedBox3D};
use crate::splat::{sh, Gaussian3D, GaussianAsset};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssetConvention {
    /// Scales are standard deviations, opacity is already activated.
    Plain,
    /// Log-scales and logit-opacities, as written by common reference
    /// splatting exporters; converted on load with exp / sigmoid.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PropType {
    F32,
    F64,
    U8,
}

impl PropType {
    fn parse(s: &str) -> Option<PropType> {
        match s {
            "float" | "float32" => Some(PropType::F32),
            "double" | "float64" => Some(PropType::F64),
            "uchar" | "uint8" => Some(PropType::U8),
            _ => None,
        }
    }
}

struct VertexLayout {
    count: usize,
    props: Vec<(String, PropType)>,
}

impl VertexLayout {
    fn index_of(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|(n, _)| n == name)
    }

    fn require(&self, path: &Path, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::malformed(path, format!("missing property '{name}'")))
    }
}

fn parse_header<R: BufRead>(r: &mut R, path: &Path) -> Result<VertexLayout> {
    let mut line = String::new();
    let read_line = |r: &mut R, line: &mut String| -> Result<()> {
        line.clear();
        let n = r.read_line(line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::malformed(path, "unexpected end of header"));
        }
        Ok(())
    };

    read_line(r, &mut line)?;
    if line.trim_end() != "ply" {
        return Err(Error::malformed(path, "not a PLY file"));
    }
    read_line(r, &mut line)?;
    if line.trim_end() != "format binary_little_endian 1.0" {
        return Err(Error::malformed(path, "only binary_little_endian 1.0 is supported"));
    }

    let mut layout: Option<VertexLayout> = None;
    loop {
        read_line(r, &mut line)?;
        let l = line.trim_end();
        if l == "end_header" {
            break;
        }
        let mut parts = l.split_whitespace();
        match parts.next() {
            Some("comment") => continue,
            Some("element") => {
                let name = parts.next().unwrap_or_default();
                let count: usize = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::malformed(path, "bad element line"))?;
                if name == "vertex" {
                    if layout.is_some() {
                        return Err(Error::malformed(path, "duplicate vertex element"));
                    }
                    layout = Some(VertexLayout {
                        count,
                        props: Vec::new(),
                    });
                } else if layout.is_none() {
                    return Err(Error::malformed(
                        path,
                        format!("element '{name}' precedes vertex data"),
                    ));
                } else if count > 0 {
                    return Err(Error::malformed(
                        path,
                        format!("unsupported trailing element '{name}'"),
                    ));
                }
            }
            Some("property") => {
                let ty = parts.next().unwrap_or_default();
                let name = parts.next().unwrap_or_default();
                let Some(layout) = layout.as_mut() else {
                    return Err(Error::malformed(path, "property before vertex element"));
                };
                let ty = PropType::parse(ty).ok_or_else(|| {
                    Error::malformed(path, format!("unsupported property type '{ty}'"))
                })?;
                layout.props.push((name.to_string(), ty));
            }
            _ => return Err(Error::malformed(path, format!("unrecognized header line '{l}'"))),
        }
    }
    layout.ok_or_else(|| Error::malformed(path, "no vertex element"))
}

/// Vertex-count cap; rejects corrupt headers before they allocate.
const MAX_VERTICES: usize = 1 << 28;

/// Reads all vertex rows as f64 (u8 colors stay raw 0..255 values).
fn read_rows<R: Read>(r: &mut R, layout: &VertexLayout, path: &Path) -> Result<Vec<Vec<f64>>> {
    if layout.count > MAX_VERTICES {
        return Err(Error::malformed(
            path,
            format!("implausible vertex count {}", layout.count),
        ));
    }
    let mut rows = Vec::with_capacity(layout.count);
    for _ in 0..layout.count {
        let mut row = Vec::with_capacity(layout.props.len());
        for (_, ty) in &layout.props {
            let v = match ty {
                PropType::F32 => r.read_f32::<LittleEndian>().map_err(|e| Error::io(path, e))? as f64,
                PropType::F64 => r.read_f64::<LittleEndian>().map_err(|e| Error::io(path, e))?,
                PropType::U8 => r.read_u8().map_err(|e| Error::io(path, e))? as f64,
            };
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_cloud(path: impl AsRef<Path>, cloud: &ColorPointCloud) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        cloud.len()
    )
    .map_err(io_err)?;
    for (p, c) in cloud.positions.iter().zip(&cloud.colors) {
        w.write_f32::<LittleEndian>(p.x as f32).map_err(io_err)?;
        w.write_f32::<LittleEndian>(p.y as f32).map_err(io_err)?;
        w.write_f32::<LittleEndian>(p.z as f32).map_err(io_err)?;
        for channel in c {
            w.write_u8((channel.clamp(0.0, 1.0) * 255.0).round() as u8)
                .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn read_cloud(path: impl AsRef<Path>) -> Result<ColorPointCloud> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let layout = parse_header(&mut r, path)?;
    let ix = layout.require(path, "x")?;
    let iy = layout.require(path, "y")?;
    let iz = layout.require(path, "z")?;
    let ir = layout.require(path, "red")?;
    let ig = layout.require(path, "green")?;
    let ib = layout.require(path, "blue")?;
    let rows = read_rows(&mut r, &layout, path)?;

    let mut cloud = ColorPointCloud::default();
    for row in rows {
        cloud
            .positions
            .push(Vector3::new(row[ix], row[iy], row[iz]));
        cloud.colors.push([
            (row[ir] / 255.0) as f32,
            (row[ig] / 255.0) as f32,
            (row[ib] / 255.0) as f32,
        ]);
    }
    Ok(cloud)
}

#[derive(Debug, Serialize, Deserialize)]
struct BoxSidecar {
    dims: [f64; 3],
    center: [f64; 3],
}

/// `foo.ply` keeps its canonical box in `foo.json`.
pub fn sidecar_path(ply_path: &Path) -> PathBuf {
    ply_path.with_extension("json")
}

pub fn write_asset(path: impl AsRef<Path>, asset: &GaussianAsset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    let n_coeffs = asset
        .gaussians
        .first()
        .map(|g| g.sh.len())
        .unwrap_or(1);
    if asset.gaussians.iter().any(|g| g.sh.len() != n_coeffs) {
        return Err(Error::invalid("asset", "mixed SH degrees within one asset"));
    }
    let n_rest = n_coeffs - 1;

    write!(w, "ply\nformat binary_little_endian 1.0\nelement vertex {}\n", asset.gaussians.len())
        .map_err(io_err)?;
    for name in ["x", "y", "z", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3", "opacity", "f_dc_0", "f_dc_1", "f_dc_2"] {
        writeln!(w, "property float {name}").map_err(io_err)?;
    }
    for i in 0..3 * n_rest {
        writeln!(w, "property float f_rest_{i}").map_err(io_err)?;
    }
    writeln!(w, "end_header").map_err(io_err)?;

    for g in &asset.gaussians {
        let q = g.rotation.quaternion();
        let vals = [
            g.position.x,
            g.position.y,
            g.position.z,
            g.scale.x,
            g.scale.y,
            g.scale.z,
            q.w,
            q.i,
            q.j,
            q.k,
            g.opacity,
            g.sh[0][0],
            g.sh[0][1],
            g.sh[0][2],
        ];
        for v in vals {
            w.write_f32::<LittleEndian>(v as f32).map_err(io_err)?;
        }
        // Channel-major rest coefficients.
        for ch in 0..3 {
            for b in 1..n_coeffs {
                w.write_f32::<LittleEndian>(g.sh[b][ch] as f32).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)?;

    let sidecar = BoxSidecar {
        dims: [
            asset.canonical_box.dims.0,
            asset.canonical_box.dims.1,
            asset.canonical_box.dims.2,
        ],
        center: [0.0, 0.0, 0.0],
    };
    let sc_path = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::malformed(&sc_path, e.to_string()))?;
    std::fs::write(&sc_path, json).map_err(|e| Error::io(&sc_path, e))?;
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn read_asset(path: impl AsRef<Path>, convention: AssetConvention) -> Result<GaussianAsset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let layout = parse_header(&mut r, path)?;

    let pos = [
        layout.require(path, "x")?,
        layout.require(path, "y")?,
        layout.require(path, "z")?,
    ];
    let scale = [
        layout.require(path, "scale_0")?,
        layout.require(path, "scale_1")?,
        layout.require(path, "scale_2")?,
    ];
    let rot = [
        layout.require(path, "rot_0")?,
        layout.require(path, "rot_1")?,
        layout.require(path, "rot_2")?,
        layout.require(path, "rot_3")?,
    ];
    let opacity = layout.require(path, "opacity")?;
    let dc = [
        layout.require(path, "f_dc_0")?,
        layout.require(path, "f_dc_1")?,
        layout.require(path, "f_dc_2")?,
    ];
    let mut rest = Vec::new();
    while let Some(i) = layout.index_of(&format!("f_rest_{}", rest.len())) {
        rest.push(i);
    }
    if rest.len() % 3 != 0 {
        return Err(Error::malformed(path, format!("{} f_rest_* properties is not divisible by 3", rest.len())));
    }
    let n_rest = rest.len() / 3;
    let n_coeffs = n_rest + 1;
    // Degree is inferred from the property count.
    if sh::degree_for_coeff_count(n_coeffs).is_none() {
        return Err(Error::malformed(
            path,
            format!("{n_coeffs} SH coefficients per channel is not a complete degree 0..=3 set"),
        ));
    }

    let rows = read_rows(&mut r, &layout, path)?;
    let mut gaussians = Vec::with_capacity(rows.len());
    for row in rows {
        let mut s = Vector3::new(row[scale[0]], row[scale[1]], row[scale[2]]);
        let mut op = row[opacity];
        if convention == AssetConvention::Reference {
            s = s.map(f64::exp);
            op = sigmoid(op);
        }
        let q = nalgebra::Quaternion::new(row[rot[0]], row[rot[1]], row[rot[2]], row[rot[3]]);
        let mut sh_coeffs = vec![[row[dc[0]], row[dc[1]], row[dc[2]]]];
        for b in 0..n_rest {
            sh_coeffs.push([
                row[rest[b]],
                row[rest[n_rest + b]],
                row[rest[2 * n_rest + b]],
            ]);
        }
        let g = Gaussian3D {
            position: Vector3::new(row[pos[0]], row[pos[1]], row[pos[2]]),
            scale: s,
            rotation: UnitQuaternion::from_quaternion(q),
            opacity: op.clamp(0.0, 1.0),
            sh: sh_coeffs,
        };
        g.validate()
            .map_err(|e| Error::malformed(path, e.to_string()))?;
        gaussians.push(g);
    }

    let sc_path = sidecar_path(path);
    let sidecar: BoxSidecar = serde_json::from_str(
        &std::fs::read_to_string(&sc_path).map_err(|e| Error::io(&sc_path, e))?,
    )
    .map_err(|e| Error::malformed(&sc_path, e.to_string()))?;
    if sidecar.center != [0.0, 0.0, 0.0] {
        return Err(Error::malformed(&sc_path, "canonical box center must be the origin"));
    }
    let canonical_box =
        OrientedBox3D::canonical((sidecar.dims[0], sidecar.dims[1], sidecar.dims[2]))?;
    GaussianAsset::new(gaussians, canonical_box)
}
