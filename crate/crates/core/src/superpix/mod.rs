//! Mask-constrained superpixel segmentation and per-superpixel statistics.

mod slic;

use std::io::Write;

use rayon::prelude::*;

pub use slic::{slic_masked, slic_masked_lab};

use crate::error::{Error, Result};
use crate::imagecore::{check_same_size, ImageBuffer, ShadowMask};

/// Superpixels whose shadow share exceeds this are labeled shadow.
pub const SHADOW_PROPORTION: f64 = 0.8;

/// Native L*a*b* ranges used for histogramming.
pub const LAB_RANGES: [(f64, f64); 3] = [(0.0, 100.0), (-128.0, 128.0), (-128.0, 128.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuperpixelClass {
    Shadow,
    NonShadow,
}

impl SuperpixelClass {
    pub fn is_shadow(self) -> bool {
        self == SuperpixelClass::Shadow
    }
}

/// SLIC parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationConfig {
    /// Desired pixels per superpixel.
    pub target_size: usize,
    pub compactness: f64,
    pub iterations: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            target_size: 600,
            compactness: 10.0,
            iterations: 10,
        }
    }
}

impl SegmentationConfig {
    pub fn with_target_size(target_size: usize) -> Self {
        Self {
            target_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_size < 16 {
            return Err(Error::InvalidConfig(format!(
                "superpixel size must be at least 16, got {}",
                self.target_size
            )));
        }
        if !(self.compactness > 0.0) || self.iterations == 0 {
            return Err(Error::InvalidConfig(
                "compactness must be positive and iterations at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Histogram granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramConfig {
    pub lab_bins: usize,
    pub lbp_bins: usize,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            lab_bins: 32,
            lbp_bins: 256,
        }
    }
}

impl HistogramConfig {
    /// Bin index of a native-unit Lab value in channel `c`.
    #[inline]
    pub fn lab_bin(&self, c: usize, value: f64) -> usize {
        let (lo, hi) = LAB_RANGES[c];
        let t = (value - lo) / (hi - lo) * self.lab_bins as f64;
        (t.max(0.0) as usize).min(self.lab_bins - 1)
    }

    /// Bin centers of channel `c`, in native Lab units.
    pub fn lab_bin_centers(&self, c: usize) -> Vec<f64> {
        let (lo, hi) = LAB_RANGES[c];
        let width = (hi - lo) / self.lab_bins as f64;
        (0..self.lab_bins)
            .map(|k| lo + (k as f64 + 0.5) * width)
            .collect()
    }

    #[inline]
    pub fn lbp_bin(&self, code: u8) -> usize {
        usize::from(code) * self.lbp_bins / 256
    }

    pub fn validate(&self) -> Result<()> {
        if self.lab_bins < 2 || !(1..=256).contains(&self.lbp_bins) {
            return Err(Error::InvalidConfig(format!(
                "histogram bins out of range: lab {}, lbp {}",
                self.lab_bins, self.lbp_bins
            )));
        }
        Ok(())
    }
}

/// One superpixel and its statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Superpixel {
    pub id: usize,
    pub class: SuperpixelClass,
    /// Linear pixel indices, ascending.
    pub pixels: Vec<usize>,
    /// Share of member pixels marked shadow.
    pub shadow_fraction: f64,
    /// `(row, col)` mean of member coordinates.
    pub centroid: (f64, f64),
    pub mean_rgb: [f64; 3],
    pub mean_lab: [f64; 3],
    pub lab_histograms: [Vec<f64>; 3],
    pub lbp_histogram: Vec<f64>,
    pub mean_a: f64,
}

impl Superpixel {
    fn bare(id: usize, pixels: Vec<usize>, width: usize) -> Self {
        let n = pixels.len() as f64;
        let (mut sr, mut sc) = (0.0, 0.0);
        for &p in &pixels {
            sr += (p / width) as f64;
            sc += (p % width) as f64;
        }
        Self {
            id,
            class: SuperpixelClass::NonShadow,
            pixels,
            shadow_fraction: 0.0,
            centroid: (sr / n, sc / n),
            mean_rgb: [0.0; 3],
            mean_lab: [0.0; 3],
            lab_histograms: [Vec::new(), Vec::new(), Vec::new()],
            lbp_histogram: Vec::new(),
            mean_a: 0.0,
        }
    }

    pub fn is_shadow(&self) -> bool {
        self.class.is_shadow()
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Member pixels as `(row, col)`.
    pub fn coords(&self, width: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixels.iter().map(move |&p| (p / width, p % width))
    }

    /// Euclidean distance between centroids.
    pub fn centroid_distance(&self, other: &Superpixel) -> f64 {
        let dr = self.centroid.0 - other.centroid.0;
        let dc = self.centroid.1 - other.centroid.1;
        (dr * dr + dc * dc).sqrt()
    }
}

/// Per-pixel superpixel labels plus the region table.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    regions: Vec<Superpixel>,
}

impl SuperpixelMap {
    /// Builds a map from dense labels `0..K`. Every label must be used.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Dimension(format!(
                "label map of {width}x{height} needs {} entries, got {}",
                width * height,
                labels.len()
            )));
        }
        let k = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (p, &l) in labels.iter().enumerate() {
            members[l as usize].push(p);
        }
        if let Some(id) = members.iter().position(Vec::is_empty) {
            return Err(Error::InvalidInput(format!(
                "superpixel label {id} has no pixels"
            )));
        }
        let regions = members
            .into_iter()
            .enumerate()
            .map(|(id, px)| Superpixel::bare(id, px, width))
            .collect();
        Ok(Self {
            width,
            height,
            labels,
            regions,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn regions(&self) -> &[Superpixel] {
        &self.regions
    }

    pub fn regions_mut(&mut self) -> &mut [Superpixel] {
        &mut self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn region(&self, id: usize) -> &Superpixel {
        &self.regions[id]
    }

    pub fn shadow_ids(&self) -> Vec<usize> {
        self.ids_of(SuperpixelClass::Shadow)
    }

    pub fn nonshadow_ids(&self) -> Vec<usize> {
        self.ids_of(SuperpixelClass::NonShadow)
    }

    fn ids_of(&self, class: SuperpixelClass) -> Vec<usize> {
        self.regions
            .iter()
            .filter(|sp| sp.class == class)
            .map(|sp| sp.id)
            .collect()
    }

    /// Random-color rendering of the label map, for debugging.
    pub fn visualize(&self) -> ImageBuffer {
        let palette: Vec<[f64; 3]> = (0..self.regions.len())
            .map(|id| {
                // splitmix-style hash for well-spread colors
                let mut z = (id as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
                z ^= z >> 31;
                [z & 0xff, (z >> 8) & 0xff, (z >> 16) & 0xff].map(|b| b as f64 / 255.0)
            })
            .collect();
        ImageBuffer::from_fn(self.width, self.height, |col, row| {
            palette[self.labels[row * self.width + col] as usize]
        })
    }

    /// Line-delimited region table: id, class, centroid, means.
    pub fn write_table(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# id\tclass\tpixels\trow\tcol\tr\tg\tb\tL\ta\tb")?;
        for sp in &self.regions {
            writeln!(
                out,
                "{}\t{}\t{}\t{:.3}\t{:.3}\t{:.5}\t{:.5}\t{:.5}\t{:.3}\t{:.3}\t{:.3}",
                sp.id,
                if sp.is_shadow() {
                    "shadow"
                } else {
                    "nonshadow"
                },
                sp.len(),
                sp.centroid.0,
                sp.centroid.1,
                sp.mean_rgb[0],
                sp.mean_rgb[1],
                sp.mean_rgb[2],
                sp.mean_lab[0],
                sp.mean_lab[1],
                sp.mean_lab[2],
            )?;
        }
        Ok(())
    }
}

/// Labels each superpixel by the share of its pixels that are shadow.
pub fn classify_superpixels(mut map: SuperpixelMap, mask: &ShadowMask) -> Result<SuperpixelMap> {
    if map.width != mask.width() || map.height != mask.height() {
        return Err(Error::Dimension(
            "superpixel map and mask differ in size".into(),
        ));
    }
    for sp in &mut map.regions {
        let shadow = sp.pixels.iter().filter(|&&p| mask.at(p)).count();
        sp.shadow_fraction = shadow as f64 / sp.pixels.len() as f64;
        sp.class = if sp.shadow_fraction > SHADOW_PROPORTION {
            SuperpixelClass::Shadow
        } else {
            SuperpixelClass::NonShadow
        };
    }
    Ok(map)
}

/// Recovers the 8-bit LBP code stored as `code / 255`.
#[inline]
pub(crate) fn lbp_code(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Fills means and histograms of `sp` from the listed pixels.
pub(crate) fn fill_stats(
    sp: &mut Superpixel,
    pixels: &[usize],
    rgb: &ImageBuffer,
    lab: &ImageBuffer,
    lbp: &ImageBuffer,
    cfg: &HistogramConfig,
) {
    assert!(!pixels.is_empty(), "superpixel {} has no pixels", sp.id);
    let n = pixels.len() as f64;
    let mut rgb_sum = [0.0; 3];
    let mut lab_sum = [0.0; 3];
    let mut lab_hist = [
        vec![0.0; cfg.lab_bins],
        vec![0.0; cfg.lab_bins],
        vec![0.0; cfg.lab_bins],
    ];
    let mut lbp_hist = vec![0.0; cfg.lbp_bins];
    for &p in pixels {
        for c in 0..3 {
            rgb_sum[c] += rgb.at(p, c);
            let v = lab.at(p, c);
            lab_sum[c] += v;
            lab_hist[c][cfg.lab_bin(c, v)] += 1.0;
        }
        lbp_hist[cfg.lbp_bin(lbp_code(lbp.at(p, 0)))] += 1.0;
    }
    for h in lab_hist.iter_mut().chain(std::iter::once(&mut lbp_hist)) {
        h.iter_mut().for_each(|v| *v /= n);
    }
    sp.mean_rgb = rgb_sum.map(|s| s / n);
    sp.mean_lab = lab_sum.map(|s| s / n);
    sp.mean_a = sp.mean_lab[1];
    sp.lab_histograms = lab_hist;
    sp.lbp_histogram = lbp_hist;
}

fn check_stat_inputs(
    rgb: &ImageBuffer,
    lab: &ImageBuffer,
    lbp: &ImageBuffer,
    map: &SuperpixelMap,
) -> Result<()> {
    rgb.require_channels(3, "region stats (rgb)")?;
    lab.require_channels(3, "region stats (lab)")?;
    lbp.require_channels(1, "region stats (lbp)")?;
    check_same_size(rgb, lab, "rgb vs lab")?;
    check_same_size(rgb, lbp, "rgb vs lbp")?;
    if rgb.width() != map.width || rgb.height() != map.height {
        return Err(Error::Dimension(
            "image and superpixel map differ in size".into(),
        ));
    }
    Ok(())
}

/// Computes means and normalized Lab/LBP histograms for every superpixel.
pub fn compute_region_stats(
    rgb: &ImageBuffer,
    lab: &ImageBuffer,
    lbp: &ImageBuffer,
    mut map: SuperpixelMap,
    cfg: &HistogramConfig,
) -> Result<SuperpixelMap> {
    check_stat_inputs(rgb, lab, lbp, &map)?;
    cfg.validate()?;
    map.regions.par_iter_mut().for_each(|sp| {
        let pixels = std::mem::take(&mut sp.pixels);
        fill_stats(sp, &pixels, rgb, lab, lbp, cfg);
        sp.pixels = pixels;
    });
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::lbp_map;
    use crate::imagecore::{rgb_to_gray, rgb_to_lab};

    fn map_with_mask(fraction_shadow: usize, total: usize) -> (SuperpixelMap, ShadowMask) {
        let map = SuperpixelMap::from_labels(total, 1, vec![0; total]).unwrap();
        let mask = ShadowMask::from_fn(total, 1, |c, _| c < fraction_shadow);
        (map, mask)
    }

    #[test]
    fn classify_thresholds() {
        for (shadow, total, want) in [
            (100, 100, SuperpixelClass::Shadow),
            (50, 100, SuperpixelClass::NonShadow),
            (81, 100, SuperpixelClass::Shadow),
            (80, 100, SuperpixelClass::NonShadow),
            (0, 100, SuperpixelClass::NonShadow),
        ] {
            let (map, mask) = map_with_mask(shadow, total);
            let map = classify_superpixels(map, &mask).unwrap();
            assert_eq!(map.region(0).class, want, "{shadow}/{total}");
        }
    }

    #[test]
    fn from_labels_rejects_gaps() {
        assert!(SuperpixelMap::from_labels(3, 1, vec![0, 2, 2]).is_err());
        assert!(SuperpixelMap::from_labels(3, 1, vec![0, 1]).is_err());
    }

    fn stats_for(img: &ImageBuffer, labels: Vec<u32>) -> SuperpixelMap {
        let lab = rgb_to_lab(img).unwrap();
        let lbp = lbp_map(&rgb_to_gray(img).unwrap()).unwrap();
        let map = SuperpixelMap::from_labels(img.width(), img.height(), labels).unwrap();
        compute_region_stats(img, &lab, &lbp, map, &HistogramConfig::default()).unwrap()
    }

    #[test]
    fn constant_region_histograms_are_single_bin() {
        let img = ImageBuffer::filled(6, 5, &[0.3, 0.5, 0.7]);
        let map = stats_for(&img, vec![0; 30]);
        let sp = map.region(0);
        for h in sp
            .lab_histograms
            .iter()
            .chain(std::iter::once(&sp.lbp_histogram))
        {
            assert_eq!(h.iter().filter(|&&v| v > 0.0).count(), 1);
            assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(sp.lbp_histogram[255], 1.0);
        assert!((sp.mean_a - sp.mean_lab[1]).abs() < 1e-15);
    }

    #[test]
    fn mean_of_black_and_white() {
        let img = ImageBuffer::from_fn(2, 1, |c, _| if c == 0 { [0.0; 3] } else { [1.0; 3] });
        let map = stats_for(&img, vec![0, 0]);
        assert_eq!(map.region(0).mean_rgb, [0.5, 0.5, 0.5]);
        assert_eq!(map.region(0).centroid, (0.0, 0.5));
    }

    #[test]
    fn histograms_normalized_on_random_image() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let img = ImageBuffer::from_fn(20, 20, |_, _| [rng.gen(), rng.gen(), rng.gen()]);
        let labels = (0..400)
            .map(|p| ((p % 20) / 5 + 4 * ((p / 20) / 10)) as u32)
            .collect();
        let map = stats_for(&img, labels);
        assert_eq!(map.len(), 8);
        for sp in map.regions() {
            for h in sp
                .lab_histograms
                .iter()
                .chain(std::iter::once(&sp.lbp_histogram))
            {
                assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            let (r, c) = sp.centroid;
            assert!((0.0..20.0).contains(&r) && (0.0..20.0).contains(&c));
        }
    }

    #[test]
    fn lab_bins_cover_native_ranges() {
        let cfg = HistogramConfig::default();
        assert_eq!(cfg.lab_bin(0, 0.0), 0);
        assert_eq!(cfg.lab_bin(0, 100.0), 31);
        assert_eq!(cfg.lab_bin(1, -128.0), 0);
        assert_eq!(cfg.lab_bin(1, 0.0), 16);
        assert_eq!(cfg.lab_bin(2, 127.9), 31);
        let centers = cfg.lab_bin_centers(0);
        assert!((centers[0] - 1.5625).abs() < 1e-12);
        assert!((centers[31] - 98.4375).abs() < 1e-12);
    }

    #[test]
    fn table_dump_has_one_line_per_region() {
        let img = ImageBuffer::filled(4, 2, &[0.2, 0.2, 0.2]);
        let map = stats_for(&img, vec![0, 0, 1, 1, 0, 0, 1, 1]);
        let mut buf = Vec::new();
        map.write_table(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
