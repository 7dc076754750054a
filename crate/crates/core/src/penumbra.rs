//! Penumbra band extraction and two-sided boundary smoothing.
//!
//! The band is `Dilate(M, r) ∧ ¬Erode(M, r)` with a diamond (L1) structuring
//! element. Inside it, each pixel gets a blend coefficient
//! `t = d_outer / (d_inner + d_outer)` from its Manhattan distances to the
//! eroded core and to the lit exterior. `t` runs from ~1 next to the umbra
//! core to ~0 next to the lit side. On the shadow half of the band the output
//! is `t · relit + (1 − t) · original`. On the lit half the relit image equals
//! the original, so the per-channel gain of the nearest mask pixel is applied
//! instead, limited so that it never carries a pixel past that mask pixel's
//! relit value. The transition thus continues outward without brightening lit
//! pixels that already match the restored edge. A single band-restricted 3×3
//! mean pass then removes the residual seam.

use crate::error::{Error, Result};
use crate::imagecore::{check_same_size, ImageBuffer, ShadowMask};

const FAR: u32 = u32::MAX / 4;
const NO_SOURCE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Dilate,
    Erode,
}

/// Exact L1 distance to the nearest seed pixel via the two-pass chamfer, plus
/// the index of that seed. With `border_is_seed`, the ring just outside the
/// image also counts as a seed (source [`NO_SOURCE`]).
fn chamfer(
    width: usize,
    height: usize,
    seed: impl Fn(usize) -> bool,
    border_is_seed: bool,
) -> (Vec<u32>, Vec<u32>) {
    let n = width * height;
    let mut dist = vec![FAR; n];
    let mut src = vec![NO_SOURCE; n];
    for p in 0..n {
        if seed(p) {
            dist[p] = 0;
            src[p] = p as u32;
        } else if border_is_seed {
            let (row, col) = (p / width, p % width);
            let edge = (row + 1).min(col + 1).min(height - row).min(width - col);
            dist[p] = edge as u32;
        }
    }
    for row in 0..height {
        for col in 0..width {
            let p = row * width + col;
            if col > 0 && dist[p - 1] + 1 < dist[p] {
                dist[p] = dist[p - 1] + 1;
                src[p] = src[p - 1];
            }
            if row > 0 && dist[p - width] + 1 < dist[p] {
                dist[p] = dist[p - width] + 1;
                src[p] = src[p - width];
            }
        }
    }
    for row in (0..height).rev() {
        for col in (0..width).rev() {
            let p = row * width + col;
            if col + 1 < width && dist[p + 1] + 1 < dist[p] {
                dist[p] = dist[p + 1] + 1;
                src[p] = src[p + 1];
            }
            if row + 1 < height && dist[p + width] + 1 < dist[p] {
                dist[p] = dist[p + width] + 1;
                src[p] = src[p + width];
            }
        }
    }
    (dist, src)
}

/// Binary dilation or erosion with a diamond of radius `r`.
///
/// Outside the image counts as non-shadow, so erosion eats in from the border.
pub fn morph(mask: &ShadowMask, r: usize, op: MorphOp) -> ShadowMask {
    let (w, h) = (mask.width(), mask.height());
    if w == 0 || h == 0 {
        return mask.clone();
    }
    let r = r as u32;
    let labels = match op {
        MorphOp::Dilate => {
            let (d, _) = chamfer(w, h, |p| mask.at(p), false);
            d.into_iter().map(|v| v <= r).collect()
        }
        MorphOp::Erode => {
            let (d, _) = chamfer(w, h, |p| !mask.at(p), true);
            d.into_iter().map(|v| v > r).collect()
        }
    };
    ShadowMask::from_labels(w, h, labels).expect("same dimensions")
}

pub fn dilate(mask: &ShadowMask, r: usize) -> ShadowMask {
    morph(mask, r, MorphOp::Dilate)
}

pub fn erode(mask: &ShadowMask, r: usize) -> ShadowMask {
    morph(mask, r, MorphOp::Erode)
}

/// The penumbra band of a mask and the distances that drive blending.
#[derive(Debug, Clone)]
pub struct PenumbraBand {
    pub band: ShadowMask,
    pub radius: usize,
    /// Manhattan distance to the eroded core (0 off-band).
    pub dist_inner: Vec<u32>,
    /// Manhattan distance to the complement of the dilated mask (0 off-band).
    pub dist_outer: Vec<u32>,
    mask: ShadowMask,
    nearest_shadow: Vec<u32>,
}

impl PenumbraBand {
    /// The source mask the band was built from.
    pub fn mask(&self) -> &ShadowMask {
        &self.mask
    }

    /// `t` for a band pixel; `None` off the band.
    pub fn blend_coefficient(&self, p: usize) -> Option<f64> {
        if !self.band.at(p) {
            return None;
        }
        let (inner, outer) = (f64::from(self.dist_inner[p]), f64::from(self.dist_outer[p]));
        Some(outer / (inner + outer))
    }

    pub fn is_empty(&self) -> bool {
        self.band.is_clear()
    }
}

/// Builds the band `Dilate(M, r) − Erode(M, r)` and its distance fields.
///
/// Distances are the exact chamfer distances, capped by the value a straight
/// edge would give (`r + 1 − d` on the near side, `r + d` on the far side) so
/// that thin shadows without an eroded core still get a local ramp. Shadow
/// pixels that are in the band only because erosion ate in from the image
/// border, with no lit pixel within `r`, count as core (`d_inner = 0`).
pub fn extract_penumbra(mask: &ShadowMask, r: usize) -> PenumbraBand {
    let (w, h) = (mask.width(), mask.height());
    let n = w * h;
    let dilated = dilate(mask, r);
    let core = erode(mask, r);
    let band = dilated.minus(&core);
    let mut dist_inner = vec![0u32; n];
    let mut dist_outer = vec![0u32; n];
    let mut nearest_shadow = vec![NO_SOURCE; n];
    if r == 0 || band.is_clear() {
        return PenumbraBand {
            band,
            radius: r,
            dist_inner,
            dist_outer,
            mask: mask.clone(),
            nearest_shadow,
        };
    }
    let r32 = r as u32;
    let (to_core, _) = chamfer(w, h, |p| core.at(p), false);
    let (to_exterior, _) = chamfer(w, h, |p| !dilated.at(p), false);
    let (to_shadow, shadow_src) = chamfer(w, h, |p| mask.at(p), false);
    let (to_lit, _) = chamfer(w, h, |p| !mask.at(p), false);
    for p in 0..n {
        if !band.at(p) {
            continue;
        }
        let (inner_est, outer_est) = if mask.at(p) {
            if to_lit[p] > r32 {
                (0, r32 + 1)
            } else {
                (r32 + 1 - to_lit[p], r32 + to_lit[p])
            }
        } else {
            nearest_shadow[p] = shadow_src[p];
            (r32 + to_shadow[p], r32 + 1 - to_shadow[p])
        };
        dist_inner[p] = to_core[p].min(inner_est);
        dist_outer[p] = to_exterior[p].min(outer_est);
    }
    PenumbraBand {
        band,
        radius: r,
        dist_inner,
        dist_outer,
        mask: mask.clone(),
        nearest_shadow,
    }
}

/// Blends `relit` into `original` across the band and diffuses the seam.
///
/// Pixels off the band come from `relit` inside the mask and `original`
/// outside it. Output values are clamped to `[0, 1]`.
pub fn smooth_boundary(
    original: &ImageBuffer,
    relit: &ImageBuffer,
    band: &PenumbraBand,
) -> Result<ImageBuffer> {
    check_same_size(original, relit, "original vs relit")?;
    check_same_size(original, &band.band, "image vs penumbra band")?;
    if original.channels() != relit.channels() {
        return Err(Error::Dimension(
            "original and relit differ in channel count".into(),
        ));
    }
    let (w, h) = (original.width(), original.height());
    let n = w * h;
    let mask = &band.mask;
    let mut out = relit.clone();
    for p in 0..n {
        if !mask.at(p) {
            for c in 0..original.channels() {
                out.set(p, c, original.at(p, c));
            }
        }
    }
    if band.is_empty() {
        out.clamp_unit();
        return Ok(out);
    }

    let band_px: Vec<usize> = (0..n).filter(|&p| band.band.at(p)).collect();
    let floor = 1.0 / 255.0;
    for c in 0..original.channels() {
        let mut blended = out.channel(c).to_vec();
        for &p in &band_px {
            let t = band.blend_coefficient(p).expect("band pixel");
            let orig = original.at(p, c);
            let target = if mask.at(p) {
                relit.at(p, c)
            } else {
                let src = band.nearest_shadow[p] as usize;
                let edge = relit.at(src, c);
                let gained = orig * edge / original.at(src, c).max(floor);
                if gained >= orig {
                    gained.min(orig.max(edge))
                } else {
                    gained.max(orig.min(edge))
                }
            };
            blended[p] = t * target + (1.0 - t) * orig;
        }
        let dst = out.channel_mut(c);
        for &p in &band_px {
            let (row, col) = (p / w, p % w);
            let mut sum = 0.0;
            let mut count = 0.0;
            for r in row.saturating_sub(1)..=(row + 1).min(h - 1) {
                for cc in col.saturating_sub(1)..=(col + 1).min(w - 1) {
                    sum += blended[r * w + cc];
                    count += 1.0;
                }
            }
            dst[p] = sum / count;
        }
    }
    out.clamp_unit();
    Ok(out)
}
