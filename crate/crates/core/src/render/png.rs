use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb, RgbImage};

use super::normal_map::{Fragment, NormalMap};
use crate::{Error, Result, Vec3};

/// 16-bit code marking an uncovered pixel in depth images; covered depths use `0..=65534`.
const DEPTH_EMPTY: u16 = u16::MAX;
const DEPTH_SCALE: f64 = (u16::MAX - 1) as f64;

fn channel(c: f64) -> u8 {
    (255.0 * (c + 1.0) / 2.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Encodes each covered normal as `round(255 (n + 1) / 2)` per channel (halves round up);
/// uncovered pixels become black.
pub fn encode_png(nm: &NormalMap) -> RgbImage {
    let mut img = RgbImage::new(nm.width() as u32, nm.height() as u32);
    for (i, p) in nm.pixels().iter().enumerate() {
        let rgb = p.map_or([0, 0, 0], |f| [channel(f.normal.x), channel(f.normal.y), channel(f.normal.z)]);
        img.put_pixel((i % nm.width()) as u32, (i / nm.width()) as u32, Rgb(rgb));
    }
    img
}

/// Inverse of [`encode_png`]: black pixels are uncovered, others are renormalized to unit
/// length. Only 8-bit RGB input is accepted.
pub fn decode_png(img: &DynamicImage) -> Result<NormalMap> {
    let DynamicImage::ImageRgb8(rgb) = img else {
        return Err(Error::Format(format!("expected 8-bit RGB normal map, got {:?}", img.color())));
    };
    let pixels = rgb
        .pixels()
        .map(|&Rgb(c)| {
            if c == [0, 0, 0] {
                return None;
            }
            let n = Vec3::from(c.map(|v| 2.0 * v as f64 / 255.0 - 1.0));
            Some(Fragment {
                normal: n.normalize(),
                depth: None,
                source: None,
            })
        })
        .collect();
    Ok(NormalMap::from_pixels(rgb.width() as usize, rgb.height() as usize, pixels))
}

pub fn write_normal_png(nm: &NormalMap, path: impl AsRef<Path>) -> Result<()> {
    encode_png(nm).save(path)?;
    Ok(())
}

pub fn read_normal_png(path: impl AsRef<Path>) -> Result<NormalMap> {
    decode_png(&image::open(path)?)
}

/// 16-bit grayscale depth image: `z'` in `[0, 1]` maps to `round(65534 z')`; uncovered
/// pixels and pixels without depth get 65535.
pub fn encode_depth_png(nm: &NormalMap) -> ImageBuffer<Luma<u16>, Vec<u16>> {
    let data = nm
        .pixels()
        .iter()
        .map(|p| match p.and_then(|f| f.depth) {
            Some(z) => (z.clamp(0.0, 1.0) * DEPTH_SCALE).round() as u16,
            None => DEPTH_EMPTY,
        })
        .collect();
    ImageBuffer::from_raw(nm.width() as u32, nm.height() as u32, data).expect("buffer size matches")
}

/// Per-pixel `z'` from a depth image written by [`encode_depth_png`].
pub fn decode_depth_png(img: &DynamicImage) -> Result<Vec<Option<f64>>> {
    let DynamicImage::ImageLuma16(g) = img else {
        return Err(Error::Format(format!("expected 16-bit grayscale depth map, got {:?}", img.color())));
    };
    Ok(g
        .pixels()
        .map(|&Luma([v])| (v != DEPTH_EMPTY).then(|| v as f64 / DEPTH_SCALE))
        .collect())
}
