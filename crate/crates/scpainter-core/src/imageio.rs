//! PNG image IO.
//!
//! Images are 8-bit RGB on disk and channel-first `(3, H, W)` float arrays
//! in `[0, 1]` in memory, mapped by `/255`. Saving clamps and rounds, so a
//! load/save cycle of an 8-bit source is byte-identical.

use std::path::Path;

use image::{ImageBuffer, Rgb, RgbImage};
use ndarray::Array3;

use crate::{Error, Result};

pub fn load_rgb(path: impl AsRef<Path>) -> Result<Array3<f32>> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    let mut out = Array3::<f32>::zeros((3, h as usize, w as usize));
    for (x, y, px) in img.enumerate_pixels() {
        for c in 0..3 {
            out[(c, y as usize, x as usize)] = px.0[c] as f32 / 255.0;
        }
    }
    Ok(out)
}

pub fn save_rgb(path: impl AsRef<Path>, image: &Array3<f32>) -> Result<()> {
    let path = path.as_ref();
    let (channels, h, w) = image.dim();
    if channels != 3 {
        return Err(Error::shape("(3, H, W)", format!("{:?}", image.dim())));
    }
    let buf: RgbImage = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let px = |c: usize| {
            let v = image[(c, y as usize, x as usize)];
            (v.clamp(0.0, 1.0) * 255.0).round() as u8
        };
        Rgb([px(0), px(1), px(2)])
    });
    buf.save(path).map_err(|e| Error::malformed(path, e.to_string()))
}
