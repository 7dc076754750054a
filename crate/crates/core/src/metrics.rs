//! Evaluation: pixel-level detection scores and region-pair removal scores.
//!
//! Detection scores are reported in percent. Removal is scored on annotated
//! pairs of a shadow patch and a nearby lit reference patch of the same
//! material: the shadow recovery index (SRI) compares their gray levels and the
//! color difference (CD) their channel means on the 0–255 scale.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imagecore::{check_same_size, rgb_to_gray, ImageBuffer, ShadowMask};

/// Pixel counts of a predicted mask against ground truth, shadow = positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn from_masks(pred: &ShadowMask, truth: &ShadowMask) -> Result<Self> {
        check_same_size(pred, truth, "predicted vs ground-truth mask")?;
        let mut c = Self::default();
        for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

/// Detection scores in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionMetrics {
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub ber: f64,
    pub iou: f64,
}

/// `num / den` in percent. An empty denominator means the quantity concerns a
/// class absent from both masks, which counts as perfect agreement when `num`
/// is empty too.
fn pct(num: u64, den: u64) -> f64 {
    if den == 0 {
        100.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl DetectionMetrics {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        let recall = pct(c.tp, c.tp + c.fn_);
        let specificity = pct(c.tn, c.tn + c.fp);
        Self {
            accuracy: pct(c.tp + c.tn, c.total()),
            recall,
            precision: pct(c.tp, c.tp + c.fp),
            f1: pct(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
            ber: 100.0 - 0.5 * (recall + specificity),
            iou: pct(c.tp, c.tp + c.fp + c.fn_),
        }
    }

    pub fn from_masks(pred: &ShadowMask, truth: &ShadowMask) -> Result<Self> {
        Ok(Self::from_counts(&ConfusionCounts::from_masks(
            pred, truth,
        )?))
    }
}

/// Pixel indices of one shadow patch and its lit reference patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPair {
    pub id: u8,
    pub shadow: Vec<usize>,
    pub reference: Vec<usize>,
}

/// Minimum pixels per side of a usable pair.
pub const MIN_PAIR_PIXELS: usize = 50;

/// Shadow/reference pairs for one image.
///
/// Stored on disk as an RGB PNG: red holds the pair id (1–255, 0 for
/// unlabeled pixels), green is 0 on the shadow side and 255 on the reference
/// side.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPairAnnotation {
    width: usize,
    height: usize,
    pairs: Vec<RegionPair>,
}

impl RegionPairAnnotation {
    pub fn new(width: usize, height: usize, pairs: Vec<RegionPair>) -> Result<Self> {
        let n = width * height;
        for pair in &pairs {
            if pair.id == 0 {
                return Err(Error::InvalidInput(
                    "pair id 0 is reserved for unlabeled pixels".into(),
                ));
            }
            if pair.shadow.len() < MIN_PAIR_PIXELS || pair.reference.len() < MIN_PAIR_PIXELS {
                return Err(Error::InvalidInput(format!(
                    "pair {} has {} shadow and {} reference pixels, need {MIN_PAIR_PIXELS} each",
                    pair.id,
                    pair.shadow.len(),
                    pair.reference.len()
                )));
            }
            if pair.shadow.iter().chain(&pair.reference).any(|&p| p >= n) {
                return Err(Error::InvalidInput(format!(
                    "pair {} indexes outside the image",
                    pair.id
                )));
            }
        }
        Ok(Self {
            width,
            height,
            pairs,
        })
    }

    pub fn pairs(&self) -> &[RegionPair] {
        &self.pairs
    }

    /// Decodes the PNG color encoding.
    pub fn from_image(img: &ImageBuffer) -> Result<Self> {
        img.require_channels(3, "region-pair annotation")?;
        let mut slots: Vec<Option<RegionPair>> = vec![None; 256];
        for p in 0..img.pixel_count() {
            let id = (img.at(p, 0) * 255.0).round() as u8;
            if id == 0 {
                continue;
            }
            let pair = slots[id as usize].get_or_insert_with(|| RegionPair {
                id,
                shadow: Vec::new(),
                reference: Vec::new(),
            });
            if img.at(p, 1) >= 0.5 {
                pair.reference.push(p);
            } else {
                pair.shadow.push(p);
            }
        }
        Self::new(
            img.width(),
            img.height(),
            slots.into_iter().flatten().collect(),
        )
    }

    pub fn to_image(&self) -> ImageBuffer {
        let mut img = ImageBuffer::new(self.width, self.height, 3);
        for pair in &self.pairs {
            let r = f64::from(pair.id) / 255.0;
            for &p in &pair.shadow {
                img.set(p, 0, r);
            }
            for &p in &pair.reference {
                img.set(p, 0, r);
                img.set(p, 1, 1.0);
            }
        }
        img
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_image(&crate::imagecore::load_png(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::imagecore::save_png(&self.to_image(), path)
    }

    fn check(&self, img: &ImageBuffer) -> Result<()> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::Dimension(format!(
                "annotation is {}x{}, image is {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )));
        }
        if self.pairs.is_empty() {
            return Err(Error::InvalidInput("annotation has no region pairs".into()));
        }
        Ok(())
    }
}

fn mean_over(values: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&p| values[p]).sum::<f64>() / idx.len() as f64
}

/// Per-pair SRI values: `clip(gray(shadow) / gray(reference), 0, 2)`.
pub fn sri_per_pair(img: &ImageBuffer, ann: &RegionPairAnnotation) -> Result<Vec<f64>> {
    ann.check(img)?;
    let gray = rgb_to_gray(img)?;
    let g = gray.channel(0);
    Ok(ann
        .pairs
        .iter()
        .map(|pair| {
            let shadow = mean_over(g, &pair.shadow);
            let reference = mean_over(g, &pair.reference);
            if reference <= 0.0 {
                if shadow <= 0.0 {
                    1.0
                } else {
                    2.0
                }
            } else {
                (shadow / reference).clamp(0.0, 2.0)
            }
        })
        .collect())
}

/// Mean SRI over all pairs; 1 means the shadow side is fully restored.
pub fn sri(img: &ImageBuffer, ann: &RegionPairAnnotation) -> Result<f64> {
    let v = sri_per_pair(img, ann)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-pair CD: mean absolute channel-mean difference, 0–255 scale.
pub fn cd_per_pair(img: &ImageBuffer, ann: &RegionPairAnnotation) -> Result<Vec<f64>> {
    ann.check(img)?;
    img.require_channels(3, "color difference")?;
    Ok(ann
        .pairs
        .iter()
        .map(|pair| {
            (0..3)
                .map(|c| {
                    let ch = img.channel(c);
                    (mean_over(ch, &pair.shadow) - mean_over(ch, &pair.reference)).abs()
                })
                .sum::<f64>()
                * 255.0
                / 3.0
        })
        .collect())
}

/// Mean CD over all pairs; 0 means identical mean colors.
pub fn cd(img: &ImageBuffer, ann: &RegionPairAnnotation) -> Result<f64> {
    let v = cd_per_pair(img, ann)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}
