//! Threshold shadow detector used when no mask is supplied.
//!
//! Shadows in aerial imagery are dark and, under blue skylight, more saturated
//! than their lit surroundings. A pixel is flagged when its HSV value is below
//! an image-adaptive quantile and it is either saturated or very dark. Small
//! components are dropped and a 3×3 closing fills pinholes.

use crate::error::{Error, Result};
use crate::imagecore::{rgb_to_hsv, ImageBuffer, ShadowMask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    /// Quantile of the value channel used as darkness threshold.
    pub value_percentile: f64,
    pub sat_min: f64,
    /// Components smaller than this are discarded.
    pub min_component: usize,
    pub close_radius: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            value_percentile: 0.3,
            sat_min: 0.15,
            min_component: 25,
            close_radius: 1,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.value_percentile > 0.0 && self.value_percentile < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "value percentile must lie in (0, 1), got {}",
                self.value_percentile
            )));
        }
        if !(0.0..=1.0).contains(&self.sat_min) {
            return Err(Error::InvalidConfig(format!(
                "minimum saturation must lie in [0, 1], got {}",
                self.sat_min
            )));
        }
        Ok(())
    }
}

fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() - 1) as f64 * q).round() as usize;
    v[idx]
}

/// Drops 4-connected shadow components with fewer than `min_size` pixels.
fn remove_small(mask: &mut ShadowMask, min_size: usize) {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut comp = Vec::new();
    for start in 0..w * h {
        if seen[start] || !mask.at(start) {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        comp.clear();
        while let Some(p) = stack.pop() {
            comp.push(p);
            let (r, c) = (p / w, p % w);
            let mut visit = |q: usize| {
                if !seen[q] && mask.at(q) {
                    seen[q] = true;
                    stack.push(q);
                }
            };
            if c > 0 {
                visit(p - 1);
            }
            if c + 1 < w {
                visit(p + 1);
            }
            if r > 0 {
                visit(p - w);
            }
            if r + 1 < h {
                visit(p + w);
            }
        }
        if comp.len() < min_size {
            for &p in &comp {
                mask.set(p % w, p / w, false);
            }
        }
    }
}

/// Square structuring element of half-width `r` (Chebyshev ball).
fn square(mask: &ShadowMask, r: usize, grow: bool) -> ShadowMask {
    let (w, h) = (mask.width(), mask.height());
    let r = r as isize;
    ShadowMask::from_fn(w, h, |col, row| {
        let mut hit = !grow;
        for dr in -r..=r {
            for dc in -r..=r {
                let (y, x) = (row as isize + dr, col as isize + dc);
                let inside = y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w;
                // outside the image counts as shadow so closing does not eat the border
                let v = !inside || mask.get(x as usize, y as usize);
                if grow && inside && v {
                    hit = true;
                } else if !grow && !v {
                    hit = false;
                }
            }
        }
        hit
    })
}

/// Flags shadow pixels of an RGB image.
pub fn detect_shadows(img: &ImageBuffer, cfg: &DetectConfig) -> Result<ShadowMask> {
    cfg.validate()?;
    let hsv = rgb_to_hsv(img)?;
    let (sat, val) = (hsv.channel(1), hsv.channel(2));
    let q = quantile(val, cfg.value_percentile);
    let mut mask = ShadowMask::from_fn(img.width(), img.height(), |col, row| {
        let p = row * img.width() + col;
        val[p] < q && (sat[p] >= cfg.sat_min || val[p] < q / 2.0)
    });
    remove_small(&mut mask, cfg.min_component);
    if cfg.close_radius > 0 {
        mask = square(
            &square(&mask, cfg.close_radius, true),
            cfg.close_radius,
            false,
        );
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::DetectionMetrics;

    fn scene() -> (ImageBuffer, ShadowMask) {
        let truth = ShadowMask::from_fn(64, 64, |c, r| {
            (10..30).contains(&c) && (20..50).contains(&r)
        });
        let img = ImageBuffer::from_fn(64, 64, |c, r| {
            let t = ((c * 7 + r * 13) % 11) as f64 / 110.0;
            if truth.get(c, r) {
                [0.08 + t * 0.2, 0.1 + t * 0.2, 0.2 + t * 0.2]
            } else {
                [0.55 + t, 0.5 + t, 0.45 + t]
            }
        });
        (img, truth)
    }

    #[test]
    fn finds_dark_bluish_block() {
        let (img, truth) = scene();
        let pred = detect_shadows(&img, &DetectConfig::default()).unwrap();
        let m = DetectionMetrics::from_masks(&pred, &truth).unwrap();
        assert!(m.iou > 90.0, "iou {}", m.iou);
    }

    #[test]
    fn speckle_is_removed() {
        let img = ImageBuffer::from_fn(40, 40, |c, r| {
            if (c, r) == (5, 5) || (c, r) == (30, 12) {
                [0.02, 0.02, 0.1]
            } else {
                [0.6, 0.6, 0.6]
            }
        });
        let pred = detect_shadows(&img, &DetectConfig::default()).unwrap();
        assert!(pred.is_clear());
    }

    #[test]
    fn closing_fills_pinholes() {
        let mut m =
            ShadowMask::from_fn(20, 20, |c, r| (4..16).contains(&c) && (4..16).contains(&r));
        m.set(9, 9, false);
        let closed = square(&square(&m, 1, true), 1, false);
        assert!(closed.get(9, 9));
        assert_eq!(closed.shadow_count(), 144);
    }

    #[test]
    fn constant_image_has_no_shadow() {
        let img = ImageBuffer::filled(30, 20, &[0.8, 0.8, 0.8]);
        let pred = detect_shadows(&img, &DetectConfig::default()).unwrap();
        assert_eq!((pred.width(), pred.height()), (30, 20));
        assert!(pred.is_clear());
    }

    #[test]
    fn gray_darkened_rectangle() {
        let truth = ShadowMask::from_fn(80, 60, |c, r| {
            (30..60).contains(&c) && (10..35).contains(&r)
        });
        let img = ImageBuffer::from_fn(80, 60, |c, r| {
            let v = 0.7 + 0.05 * (((c / 4 + r / 4) % 2) as f64);
            let v = if truth.get(c, r) { v * 0.35 } else { v };
            [v, v, v]
        });
        let pred = detect_shadows(&img, &DetectConfig::default()).unwrap();
        let m = DetectionMetrics::from_masks(&pred, &truth).unwrap();
        assert!(m.iou >= 90.0, "iou {}", m.iou);
    }

    proptest::proptest! {
        #[test]
        fn raising_percentile_never_shrinks_candidates(seed in 0u64..1000, lo in 0.05f64..0.5, step in 0.0f64..0.4) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let img = ImageBuffer::from_fn(16, 16, |_, _| [rng.gen(), rng.gen(), rng.gen()]);
            let raw = |pct: f64| {
                let cfg = DetectConfig { value_percentile: pct, min_component: 0, close_radius: 0, ..DetectConfig::default() };
                detect_shadows(&img, &cfg).unwrap()
            };
            let (small, large) = (raw(lo), raw(lo + step));
            proptest::prop_assert!(small.labels().iter().zip(large.labels()).all(|(&a, &b)| !a || b));
        }
    }

    #[test]
    fn rejects_bad_percentile() {
        let cfg = DetectConfig {
            value_percentile: 1.5,
            ..DetectConfig::default()
        };
        assert!(detect_shadows(&ImageBuffer::new(4, 4, 3), &cfg).is_err());
    }
}
