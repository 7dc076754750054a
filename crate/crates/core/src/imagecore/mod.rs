//! Raster buffers, binary shadow masks, color conversions and PNG I/O.
//!
//! Images are stored planar (`channel * width * height + row * width + col`) as
//! normalized `f64` intensities. Values are in `[0, 1]` after loading but may
//! transiently leave that range while relighting.

mod color;
mod io;

pub use color::{hsv_to_rgb, lab_pixel, rgb_to_gray, rgb_to_hsv, rgb_to_lab, srgb_to_linear};
pub use io::{load_mask, load_png, save_mask, save_png};

use crate::error::{Error, Result};

/// Planar multi-channel raster of normalized intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    /// A zero-filled image.
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    /// Wraps planar data, checking that its length matches the dimensions.
    pub fn from_planar(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Dimension(
                "image must have at least one channel".into(),
            ));
        }
        if data.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "expected {} values for {width}x{height}x{channels}, got {}",
                width * height * channels,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite pixel value {bad}")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image by evaluating `f(col, row)` for every pixel.
    pub fn from_fn<const C: usize>(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; C],
    ) -> Self {
        let mut img = Self::new(width, height, C);
        let n = width * height;
        for row in 0..height {
            for col in 0..width {
                let px = f(col, row);
                let idx = row * width + col;
                for (c, v) in px.iter().enumerate() {
                    img.data[c * n + idx] = *v;
                }
            }
        }
        img
    }

    /// A constant-valued image.
    pub fn filled(width: usize, height: usize, value: &[f64]) -> Self {
        let n = width * height;
        let mut data = Vec::with_capacity(n * value.len());
        for &v in value {
            data.extend(std::iter::repeat_n(v, n));
        }
        Self {
            width,
            height,
            channels: value.len(),
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of pixels (not values).
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.pixel_count();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Value of channel `c` at linear pixel index `idx`.
    #[inline]
    pub fn at(&self, idx: usize, c: usize) -> f64 {
        self.data[c * self.pixel_count() + idx]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, c: usize, value: f64) {
        let n = self.pixel_count();
        self.data[c * n + idx] = value;
    }

    /// Value at `(col, row)` in channel `c`.
    pub fn get(&self, col: usize, row: usize, c: usize) -> f64 {
        self.at(row * self.width + col, c)
    }

    /// First three channels of a pixel.
    #[inline]
    pub fn rgb(&self, idx: usize) -> [f64; 3] {
        let n = self.pixel_count();
        [self.data[idx], self.data[n + idx], self.data[2 * n + idx]]
    }

    pub fn same_size<T: Raster>(&self, other: &T) -> bool {
        self.width == other.width() && self.height == other.height()
    }

    pub(crate) fn require_channels(&self, channels: usize, what: &str) -> Result<()> {
        if self.channels != channels {
            return Err(Error::Dimension(format!(
                "{what} expects a {channels}-channel image, got {}",
                self.channels
            )));
        }
        Ok(())
    }

    /// Clamps every value into `[0, 1]`.
    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Places `other` to the right of `self`. Both must share height and channel count.
    pub fn hconcat(&self, other: &ImageBuffer) -> Result<ImageBuffer> {
        if self.height != other.height || self.channels != other.channels {
            return Err(Error::Dimension(
                "hconcat needs equal height and channels".into(),
            ));
        }
        let width = self.width + other.width;
        let mut out = ImageBuffer::new(width, self.height, self.channels);
        for c in 0..self.channels {
            for row in 0..self.height {
                for col in 0..width {
                    let v = if col < self.width {
                        self.get(col, row, c)
                    } else {
                        other.get(col - self.width, row, c)
                    };
                    out.set(row * width + col, c, v);
                }
            }
        }
        Ok(out)
    }
}

/// Anything with raster dimensions.
pub trait Raster {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
}

impl Raster for ImageBuffer {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
}

impl Raster for ShadowMask {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
}

/// Fails with a dimension error unless both rasters have the same size.
pub fn check_same_size<A: Raster, B: Raster>(a: &A, b: &B, what: &str) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Dimension(format!(
            "{what}: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Binary per-pixel shadow labels (`true` = shadow).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowMask {
    width: usize,
    height: usize,
    labels: Vec<bool>,
}

impl ShadowMask {
    /// A mask with no shadow pixels.
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![false; width * height],
        }
    }

    /// A mask where every pixel is shadow.
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![true; width * height],
        }
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Dimension(format!(
                "mask of {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    /// Builds a mask from a predicate over `(col, row)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut labels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                labels.push(f(col, row));
            }
        }
        Self {
            width,
            height,
            labels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    #[inline]
    pub fn at(&self, idx: usize) -> bool {
        self.labels[idx]
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.labels[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.labels[row * self.width + col] = value;
    }

    pub fn shadow_count(&self) -> usize {
        self.labels.iter().filter(|&&s| s).count()
    }

    /// True when no pixel is shadow.
    pub fn is_clear(&self) -> bool {
        !self.labels.iter().any(|&s| s)
    }

    pub fn inverted(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            labels: self.labels.iter().map(|&s| !s).collect(),
        }
    }

    /// Pixelwise `self AND NOT other`.
    pub fn minus(&self, other: &ShadowMask) -> Self {
        Self {
            width: self.width,
            height: self.height,
            labels: self
                .labels
                .iter()
                .zip(&other.labels)
                .map(|(&a, &b)| a && !b)
                .collect(),
        }
    }
}
