use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};

use super::{ImageBuffer, ShadowMask};
use crate::error::{Error, Result};

fn decode(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = reader.with_guessed_format().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn from_bytes(width: usize, height: usize, channels: usize, bytes: &[u8]) -> ImageBuffer {
    let n = width * height;
    let mut img = ImageBuffer::new(width, height, channels);
    for (i, px) in bytes.chunks_exact(channels).enumerate().take(n) {
        for (c, &b) in px.iter().enumerate() {
            img.set(i, c, f64::from(b) / 255.0);
        }
    }
    img
}

/// Loads an 8-bit RGB or grayscale PNG, scaling values by 1/255.
pub fn load_png(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    match decode(path)? {
        DynamicImage::ImageLuma8(g) => Ok(from_bytes(
            g.width() as usize,
            g.height() as usize,
            1,
            g.as_raw(),
        )),
        DynamicImage::ImageRgb8(rgb) => Ok(from_bytes(
            rgb.width() as usize,
            rgb.height() as usize,
            3,
            rgb.as_raw(),
        )),
        other => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: format!("{:?}; expected 8-bit RGB or grayscale", other.color()),
        }),
    }
}

#[inline]
fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn encode_err(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

/// Saves a 1- or 3-channel image as 8-bit PNG (clamped, round-half-up).
pub fn save_png(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let n = img.pixel_count();
    match img.channels() {
        1 => {
            let bytes = img.channel(0).iter().map(|&v| to_byte(v)).collect();
            let buf = GrayImage::from_raw(w, h, bytes).expect("buffer length matches dimensions");
            buf.save(path).map_err(|e| encode_err(path, e))
        }
        3 => {
            let mut bytes = Vec::with_capacity(3 * n);
            for idx in 0..n {
                bytes.extend(img.rgb(idx).map(to_byte));
            }
            let buf = RgbImage::from_raw(w, h, bytes).expect("buffer length matches dimensions");
            buf.save(path).map_err(|e| encode_err(path, e))
        }
        c => Err(Error::Dimension(format!(
            "cannot save a {c}-channel image as PNG"
        ))),
    }
}

/// Loads a mask PNG. The first channel decides: values >= 128 are shadow.
pub fn load_mask(path: impl AsRef<Path>) -> Result<ShadowMask> {
    let path = path.as_ref();
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (bytes, stride) = match &img {
        DynamicImage::ImageLuma8(g) => (g.as_raw().as_slice(), 1),
        DynamicImage::ImageLumaA8(g) => (g.as_raw().as_slice(), 2),
        DynamicImage::ImageRgb8(g) => (g.as_raw().as_slice(), 3),
        DynamicImage::ImageRgba8(g) => (g.as_raw().as_slice(), 4),
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: format!("{:?}; masks must be 8-bit", other.color()),
            })
        }
    };
    let labels = bytes.chunks_exact(stride).map(|px| px[0] >= 128).collect();
    ShadowMask::from_labels(w, h, labels)
}

/// Saves a mask as 8-bit grayscale, 255 = shadow.
pub fn save_mask(mask: &ShadowMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = mask
        .labels()
        .iter()
        .map(|&s| if s { 255 } else { 0 })
        .collect();
    let buf = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, bytes)
        .expect("buffer length matches dimensions");
    buf.save(path).map_err(|e| encode_err(path, e))
}
