//! Raw float tensor files (`.scpt`).
//!
//! Layout: magic `"SCPT"`, `u32` rank, `rank` × `u32` dims, then the payload
//! as little-endian `f32` in row-major (C) order. For the common rank-2 maps
//! the header is exactly 16 bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array2, Array3, Array4, ArrayD, ArrayViewD, IxDyn};

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SCPT";

/// Upper bound on total element count accepted by the reader; rejects
/// corrupt headers before they turn into huge allocations.
const MAX_ELEMENTS: u64 = 1 << 31;

pub fn write_tensor(path: impl AsRef<Path>, tensor: ArrayViewD<'_, f32>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    w.write_all(MAGIC).map_err(io_err)?;
    w.write_u32::<LittleEndian>(tensor.ndim() as u32)
        .map_err(io_err)?;
    for &d in tensor.shape() {
        w.write_u32::<LittleEndian>(d as u32).map_err(io_err)?;
    }
    // as_standard_layout is a no-op for freshly built arrays; it only copies
    // when the caller hands in a transposed view.
    let std_layout = tensor.as_standard_layout();
    for &v in std_layout.iter() {
        w.write_f32::<LittleEndian>(v).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<ArrayD<f32>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let io_err = |e| Error::io(path, e);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(Error::malformed(path, format!("bad magic {magic:?}")));
    }
    let rank = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    if rank == 0 || rank > 8 {
        return Err(Error::malformed(path, format!("unsupported rank {rank}")));
    }
    let mut dims = Vec::with_capacity(rank);
    let mut total: u64 = 1;
    for _ in 0..rank {
        let d = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        total = total.saturating_mul(d as u64);
        dims.push(d);
    }
    if total > MAX_ELEMENTS {
        return Err(Error::malformed(path, format!("tensor too large: {total} elements")));
    }
    let mut data = vec![0f32; total as usize];
    r.read_f32_into::<LittleEndian>(&mut data).map_err(io_err)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(io_err)? != 0 {
        return Err(Error::malformed(path, "trailing bytes after payload"));
    }
    ArrayD::from_shape_vec(IxDyn(&dims), data)
        .map_err(|e| Error::malformed(path, e.to_string()))
}

pub fn read_tensor2(path: impl AsRef<Path>) -> Result<Array2<f32>> {
    let path = path.as_ref();
    read_tensor(path)?
        .into_dimensionality()
        .map_err(|_| Error::malformed(path, "expected a rank-2 tensor"))
}

pub fn read_tensor3(path: impl AsRef<Path>) -> Result<Array3<f32>> {
    let path = path.as_ref();
    read_tensor(path)?
        .into_dimensionality()
        .map_err(|_| Error::malformed(path, "expected a rank-3 tensor"))
}

pub fn read_tensor4(path: impl AsRef<Path>) -> Result<Array4<f32>> {
    let path = path.as_ref();
    read_tensor(path)?
        .into_dimensionality()
        .map_err(|_| Error::malformed(path, "expected a rank-4 tensor"))
}
