//! Illumination transfer from lit superpixels into shadow superpixels.
//!
//! For a shadow superpixel `s` and a lit reference `i`, the per-channel
//! illumination ratio is `r_i = (μ_i − μ_s) / μ_s` on mean RGB. Ratios from the
//! `n` spatially nearest lit superpixels are combined with their contribution
//! weights, and every pixel of `s` is rescaled by `r + 1`. When every local
//! weight falls below the fallback threshold the references are instead drawn
//! from the whole image.
//!
//! Each shadow superpixel reads only statistics of the original image, so the
//! result does not depend on processing order.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{lbp_map, SimilarityBreakdown, WeightParams};
use crate::imagecore::{check_same_size, rgb_to_gray, rgb_to_lab, ImageBuffer, ShadowMask};
use crate::penumbra::{dilate, extract_penumbra, smooth_boundary};
use crate::superpix::{
    fill_stats, slic_masked_lab, HistogramConfig, SegmentationConfig, Superpixel, SuperpixelMap,
};

/// Smallest shadow-side mean used as a ratio denominator.
pub const MIN_DENOMINATOR: f64 = 1.0 / 255.0;

/// How references are chosen once the local neighborhood is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackStrategy {
    /// Top-k lit superpixels image-wide, ranked by contribution weight.
    SimilarityWeighted,
    /// Every lit superpixel with equal weight.
    NaiveAverage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelightConfig {
    pub n_neighbors: usize,
    pub weights: WeightParams,
    pub fallback_threshold: f64,
    pub fallback_top_k: usize,
    pub fallback_strategy: FallbackStrategy,
    /// Divide weights by their sum before combining ratios.
    pub normalize_weights: bool,
    pub superpixel_size: usize,
    pub compactness: f64,
    pub slic_iterations: usize,
    pub histograms: HistogramConfig,
    pub penumbra_radius: usize,
    pub smoothing: bool,
}

impl Default for RelightConfig {
    fn default() -> Self {
        Self {
            n_neighbors: 7,
            weights: WeightParams::default(),
            fallback_threshold: 0.2,
            fallback_top_k: 7,
            fallback_strategy: FallbackStrategy::SimilarityWeighted,
            normalize_weights: true,
            superpixel_size: 600,
            compactness: 10.0,
            slic_iterations: 10,
            histograms: HistogramConfig::default(),
            penumbra_radius: 3,
            smoothing: true,
        }
    }
}

impl RelightConfig {
    pub fn segmentation(&self) -> SegmentationConfig {
        SegmentationConfig {
            target_size: self.superpixel_size,
            compactness: self.compactness,
            iterations: self.slic_iterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_neighbors == 0 || self.fallback_top_k == 0 {
            return Err(Error::InvalidConfig(
                "neighbor counts must be at least 1".into(),
            ));
        }
        if !(self.fallback_threshold > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "fallback threshold must be positive, got {}",
                self.fallback_threshold
            )));
        }
        self.weights.validate()?;
        self.histograms.validate()?;
        self.segmentation().validate()
    }
}

/// What happened to one shadow superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRecord {
    pub shadow_id: usize,
    pub references: Vec<usize>,
    /// Raw contribution weights of the references.
    pub weights: Vec<f64>,
    pub ratio: [f64; 3],
    pub fallback_used: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RelightReport {
    pub records: Vec<RegionRecord>,
    pub fallback_count: usize,
    pub duration: Duration,
    pub diagnostic: Option<String>,
}

impl RelightReport {
    /// One tab-separated record per shadow superpixel, after `#` header lines.
    pub fn write_text(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# shadow_superpixels\t{}", self.records.len())?;
        writeln!(out, "# fallback_regions\t{}", self.fallback_count)?;
        writeln!(out, "# duration_s\t{:.6}", self.duration.as_secs_f64())?;
        if let Some(d) = &self.diagnostic {
            writeln!(out, "# diagnostic\t{d}")?;
        }
        writeln!(
            out,
            "# id\tfallback\tr_red\tr_green\tr_blue\treferences\tweights"
        )?;
        for rec in &self.records {
            let refs: Vec<String> = rec.references.iter().map(usize::to_string).collect();
            let ws: Vec<String> = rec.weights.iter().map(|w| format!("{w:.6}")).collect();
            writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
                rec.shadow_id,
                u8::from(rec.fallback_used),
                rec.ratio[0],
                rec.ratio[1],
                rec.ratio[2],
                refs.join(","),
                ws.join(","),
            )?;
        }
        Ok(())
    }
}

/// The `n` lit superpixels whose centroids are closest to `sp`'s, nearest
/// first, ties to the lower id.
pub fn nearest_nonshadow(map: &SuperpixelMap, sp: &Superpixel, n: usize) -> Result<Vec<usize>> {
    let mut candidates: Vec<(f64, usize)> = map
        .regions()
        .iter()
        .filter(|other| !other.is_shadow())
        .map(|other| (sp.centroid_distance(other), other.id))
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoReferences(
            "image has no non-shadow superpixels".into(),
        ));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    candidates.truncate(n);
    Ok(candidates.into_iter().map(|(_, id)| id).collect())
}

fn ratio_of(lit: [f64; 3], shadow: [f64; 3]) -> [f64; 3] {
    let mut r = [0.0; 3];
    for c in 0..3 {
        let denom = shadow[c].max(MIN_DENOMINATOR);
        r[c] = (lit[c] - denom) / denom;
    }
    r
}

/// Per-channel `(μ_ns − μ_s) / μ_s` on mean RGB.
pub fn superpixel_ratio(sp_s: &Superpixel, sp_ns: &Superpixel) -> [f64; 3] {
    ratio_of(sp_ns.mean_rgb, sp_s.mean_rgb)
}

/// Weighted combination of per-reference ratios.
pub fn aggregate_ratio(ratios: &[[f64; 3]], weights: &[f64], normalize: bool) -> Result<[f64; 3]> {
    if ratios.is_empty() || ratios.len() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "{} ratios vs {} weights",
            ratios.len(),
            weights.len()
        )));
    }
    let scale = if normalize {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("weights sum to zero".into()));
        }
        1.0 / total
    } else {
        1.0
    };
    let mut out = [0.0; 3];
    for (r, w) in ratios.iter().zip(weights) {
        for c in 0..3 {
            out[c] += r[c] * w * scale;
        }
    }
    Ok(out)
}

/// Rescales every pixel of `sp` by `ratio + 1`, clamped to `[0, 1]`.
pub fn relight_superpixel(img: &mut ImageBuffer, sp: &Superpixel, ratio: [f64; 3]) {
    for c in 0..img.channels().min(3) {
        let gain = ratio[c] + 1.0;
        let data = img.channel_mut(c);
        for &p in &sp.pixels {
            data[p] = (gain * data[p]).clamp(0.0, 1.0);
        }
    }
}

/// References chosen for one shadow superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSelection {
    pub references: Vec<usize>,
    pub similarity: Vec<SimilarityBreakdown>,
    /// Weights used when combining ratios.
    pub combine_weights: Vec<f64>,
    pub fallback_used: bool,
    /// Local candidates scored before any fallback, nearest first.
    pub local: Vec<(usize, SimilarityBreakdown)>,
}

impl ReferenceSelection {
    pub fn best_local_weight(&self) -> f64 {
        self.local.iter().map(|(_, s)| s.weight).fold(0.0, f64::max)
    }
}

/// Scores the nearest lit superpixels and falls back to an image-wide search
/// when none reaches `cfg.fallback_threshold`.
pub fn select_references(
    map: &SuperpixelMap,
    shadow_id: usize,
    cfg: &RelightConfig,
) -> Result<ReferenceSelection> {
    let sp = map.region(shadow_id);
    let score = |id: usize| SimilarityBreakdown::between(sp, map.region(id), &cfg.weights);
    let local: Vec<(usize, SimilarityBreakdown)> = nearest_nonshadow(map, sp, cfg.n_neighbors)?
        .into_iter()
        .map(|id| (id, score(id)))
        .collect();
    let best = local.iter().map(|(_, s)| s.weight).fold(0.0, f64::max);
    if best >= cfg.fallback_threshold {
        return Ok(ReferenceSelection {
            references: local.iter().map(|(id, _)| *id).collect(),
            similarity: local.iter().map(|(_, s)| *s).collect(),
            combine_weights: local.iter().map(|(_, s)| s.weight).collect(),
            fallback_used: false,
            local,
        });
    }
    let mut global: Vec<(usize, SimilarityBreakdown)> = map
        .nonshadow_ids()
        .into_iter()
        .map(|id| (id, score(id)))
        .collect();
    let combine_weights = match cfg.fallback_strategy {
        FallbackStrategy::SimilarityWeighted => {
            global.sort_by(|a, b| b.1.weight.total_cmp(&a.1.weight).then(a.0.cmp(&b.0)));
            global.truncate(cfg.fallback_top_k);
            global.iter().map(|(_, s)| s.weight).collect()
        }
        FallbackStrategy::NaiveAverage => vec![1.0; global.len()],
    };
    Ok(ReferenceSelection {
        references: global.iter().map(|(id, _)| *id).collect(),
        similarity: global.iter().map(|(_, s)| *s).collect(),
        combine_weights,
        fallback_used: true,
        local,
    })
}

/// Order in which shadow superpixels are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessingOrder {
    /// Parallel over superpixels, applied in id order.
    Parallel,
    Ascending,
    Descending,
    Shuffled(u64),
}

/// Segmentation with features ready for similarity scoring.
///
/// Lit superpixels take their statistics from pixels outside the dilated
/// mask when any remain, so that penumbra light spilling past the mask edge
/// does not lower their means.
#[derive(Debug, Clone)]
pub struct PreparedScene {
    pub map: SuperpixelMap,
}

/// Segments the image and fills the feature tables used by the relighting step.
pub fn prepare_scene(
    img: &ImageBuffer,
    mask: &ShadowMask,
    cfg: &RelightConfig,
) -> Result<PreparedScene> {
    cfg.validate()?;
    img.require_channels(3, "remove_shadows")?;
    check_same_size(img, mask, "image vs mask")?;

    let lab = rgb_to_lab(img)?;
    let mut map = slic_masked_lab(&lab, mask, &cfg.segmentation())?;
    let lbp = lbp_map(&rgb_to_gray(img)?)?;
    let near_shadow = dilate(mask, cfg.penumbra_radius);
    let hist = cfg.histograms;
    map.regions_mut().par_iter_mut().for_each(|sp| {
        let pixels = std::mem::take(&mut sp.pixels);
        let clear: Vec<usize> = if sp.is_shadow() {
            Vec::new()
        } else {
            pixels
                .iter()
                .copied()
                .filter(|&p| !near_shadow.at(p))
                .collect()
        };
        let used = if clear.is_empty() { &pixels } else { &clear };
        fill_stats(sp, used, img, &lab, &lbp, &hist);
        sp.pixels = pixels;
    });
    Ok(PreparedScene { map })
}

fn process_region(scene: &PreparedScene, id: usize, cfg: &RelightConfig) -> Result<RegionRecord> {
    let sel = select_references(&scene.map, id, cfg)?;
    let sp = scene.map.region(id);
    let ratios: Vec<[f64; 3]> = sel
        .references
        .iter()
        .map(|&ns| superpixel_ratio(sp, scene.map.region(ns)))
        .collect();
    let ratio = aggregate_ratio(&ratios, &sel.combine_weights, cfg.normalize_weights)?;
    Ok(RegionRecord {
        shadow_id: id,
        weights: sel.similarity.iter().map(|s| s.weight).collect(),
        references: sel.references,
        ratio,
        fallback_used: sel.fallback_used,
    })
}

/// Full removal: segmentation, illumination transfer, boundary smoothing.
pub fn remove_shadows(
    img: &ImageBuffer,
    mask: &ShadowMask,
    cfg: &RelightConfig,
) -> Result<(ImageBuffer, RelightReport)> {
    remove_shadows_ordered(img, mask, cfg, ProcessingOrder::Parallel)
}

/// [`remove_shadows`] with an explicit visiting order for shadow superpixels.
pub fn remove_shadows_ordered(
    img: &ImageBuffer,
    mask: &ShadowMask,
    cfg: &RelightConfig,
    order: ProcessingOrder,
) -> Result<(ImageBuffer, RelightReport)> {
    let start = Instant::now();
    cfg.validate()?;
    img.require_channels(3, "remove_shadows")?;
    check_same_size(img, mask, "image vs mask")?;
    if mask.is_clear() {
        return Ok((
            img.clone(),
            RelightReport {
                duration: start.elapsed(),
                ..RelightReport::default()
            },
        ));
    }

    let scene = prepare_scene(img, mask, cfg)?;
    let mut shadow_ids = scene.map.shadow_ids();
    if scene.map.nonshadow_ids().is_empty() {
        let records = shadow_ids
            .into_iter()
            .map(|id| RegionRecord {
                shadow_id: id,
                references: Vec::new(),
                weights: Vec::new(),
                ratio: [0.0; 3],
                fallback_used: false,
            })
            .collect();
        return Ok((
            img.clone(),
            RelightReport {
                records,
                duration: start.elapsed(),
                diagnostic: Some(
                    "no non-shadow pixels to draw illumination from; image left unchanged".into(),
                ),
                ..RelightReport::default()
            },
        ));
    }

    let records: Vec<RegionRecord> = match order {
        ProcessingOrder::Parallel => shadow_ids
            .par_iter()
            .map(|&id| process_region(&scene, id, cfg))
            .collect::<Result<_>>()?,
        sequential => {
            match sequential {
                ProcessingOrder::Descending => shadow_ids.reverse(),
                ProcessingOrder::Shuffled(seed) => {
                    shadow_ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed))
                }
                _ => {}
            }
            shadow_ids
                .iter()
                .map(|&id| process_region(&scene, id, cfg))
                .collect::<Result<_>>()?
        }
    };

    let mut relit = img.clone();
    for rec in &records {
        relight_superpixel(&mut relit, scene.map.region(rec.shadow_id), rec.ratio);
    }
    let out = if cfg.smoothing {
        smooth_boundary(img, &relit, &extract_penumbra(mask, cfg.penumbra_radius))?
    } else {
        relit
    };

    let mut records = records;
    records.sort_by_key(|r| r.shadow_id);
    let fallback_count = records.iter().filter(|r| r.fallback_used).count();
    Ok((
        out,
        RelightReport {
            records,
            fallback_count,
            duration: start.elapsed(),
            diagnostic: None,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpix::SuperpixelClass;

    fn sp_with(
        id: usize,
        centroid: (f64, f64),
        class: SuperpixelClass,
        rgb: [f64; 3],
    ) -> Superpixel {
        let mut sp = SuperpixelMap::from_labels(1, 1, vec![0]).unwrap().regions()[0].clone();
        sp.id = id;
        sp.centroid = centroid;
        sp.class = class;
        sp.mean_rgb = rgb;
        sp
    }

    /// A map whose regions are replaced by hand-built records.
    fn grid_map(side: usize) -> SuperpixelMap {
        let labels: Vec<u32> = (0..(side * side) as u32).collect();
        let mut map = SuperpixelMap::from_labels(side, side, labels).unwrap();
        let center = side / 2;
        for sp in map.regions_mut() {
            let (r, c) = (sp.id / side, sp.id % side);
            if r == center && c == center {
                sp.class = SuperpixelClass::Shadow;
            }
        }
        map
    }

    #[test]
    fn nearest_matches_exhaustive_sort() {
        let map = grid_map(9);
        let center = map.region(40).clone();
        assert!(center.is_shadow());
        for n in [1, 4, 7, 12, 80] {
            let got = nearest_nonshadow(&map, &center, n).unwrap();
            let mut all: Vec<(f64, usize)> = map
                .regions()
                .iter()
                .filter(|s| !s.is_shadow())
                .map(|s| {
                    let d = ((s.centroid.0 - 4.0).powi(2) + (s.centroid.1 - 4.0).powi(2)).sqrt();
                    (d, s.id)
                })
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let want: Vec<usize> = all.iter().take(n).map(|x| x.1).collect();
            assert_eq!(got, want);
        }
        // the 4-neighborhood comes first, lowest id first
        assert_eq!(
            &nearest_nonshadow(&map, &center, 4).unwrap(),
            &[31, 39, 41, 49]
        );
    }

    #[test]
    fn nearest_clamps_and_errors() {
        let mut map = SuperpixelMap::from_labels(2, 1, vec![0, 1]).unwrap();
        map.regions_mut()[0].class = SuperpixelClass::Shadow;
        let s = map.region(0).clone();
        assert_eq!(nearest_nonshadow(&map, &s, 7).unwrap(), vec![1]);
        map.regions_mut()[1].class = SuperpixelClass::Shadow;
        assert!(matches!(
            nearest_nonshadow(&map, &s, 7),
            Err(Error::NoReferences(_))
        ));
    }

    #[test]
    fn ratio_cases() {
        let s = sp_with(0, (0.0, 0.0), SuperpixelClass::Shadow, [0.2, 0.2, 0.2]);
        let lit = sp_with(1, (0.0, 0.0), SuperpixelClass::NonShadow, [0.6, 0.6, 0.6]);
        let r = superpixel_ratio(&s, &lit);
        for v in r {
            assert!((v - 2.0).abs() < 1e-12);
        }
        assert_eq!(superpixel_ratio(&s, &s), [0.0; 3]);
        let darker = sp_with(2, (0.0, 0.0), SuperpixelClass::NonShadow, [0.1, 0.1, 0.1]);
        assert!(superpixel_ratio(&s, &darker)[0] < 0.0);
        let black = sp_with(3, (0.0, 0.0), SuperpixelClass::Shadow, [0.0, 0.0, 0.0]);
        let clamped = superpixel_ratio(&black, &lit);
        assert!((clamped[0] - (0.6 * 255.0 - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn aggregate_cases() {
        let r1 = [1.0, 2.0, 3.0];
        assert_eq!(aggregate_ratio(&[r1], &[42.0], true).unwrap(), r1);
        let two = aggregate_ratio(&[[1.0; 3], [3.0; 3]], &[5.0, 5.0], true).unwrap();
        assert_eq!(two, [2.0; 3]);
        let three =
            aggregate_ratio(&[[4.0; 3], [8.0; 3], [0.0; 3]], &[2.0, 1.0, 1.0], true).unwrap();
        assert_eq!(three, [(2.0 * 4.0 + 8.0) / 4.0; 3]);
        let literal = aggregate_ratio(&[[1.0; 3], [1.0; 3]], &[2.0, 3.0], false).unwrap();
        assert_eq!(literal, [5.0; 3]);
        assert!(aggregate_ratio(&[], &[], true).is_err());
        assert!(aggregate_ratio(&[r1], &[1.0, 2.0], true).is_err());
    }

    #[test]
    fn relight_touches_only_members() {
        let mut img = ImageBuffer::filled(4, 1, &[0.3, 0.3, 0.3]);
        let map = SuperpixelMap::from_labels(4, 1, vec![0, 0, 1, 1]).unwrap();
        relight_superpixel(&mut img, map.region(0), [1.0, 0.0, 4.0]);
        assert!((img.at(0, 0) - 0.6).abs() < 1e-12);
        assert_eq!(img.at(0, 1), 0.3);
        assert_eq!(img.at(0, 2), 1.0);
        assert_eq!(img.at(2, 0), 0.3);
    }

    #[test]
    fn config_validation() {
        assert!(RelightConfig::default().validate().is_ok());
        let bad = [
            RelightConfig {
                n_neighbors: 0,
                ..RelightConfig::default()
            },
            RelightConfig {
                fallback_threshold: 0.0,
                ..RelightConfig::default()
            },
            RelightConfig {
                superpixel_size: 4,
                ..RelightConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    fn shadow_scene() -> (ImageBuffer, ShadowMask) {
        let mask = ShadowMask::from_fn(80, 60, |c, r| {
            (20..55).contains(&c) && (15..45).contains(&r)
        });
        let img = ImageBuffer::from_fn(80, 60, |c, r| {
            let base = 0.6 + 0.03 * (((c * 3 + r * 5) % 7) as f64 / 7.0 - 0.5);
            let v = if mask.get(c, r) { base * 0.4 } else { base };
            [v, v, v]
        });
        (img, mask)
    }

    #[test]
    fn empty_mask_is_identity() {
        let (img, _) = shadow_scene();
        let (out, report) =
            remove_shadows(&img, &ShadowMask::empty(80, 60), &RelightConfig::default()).unwrap();
        assert_eq!(out, img);
        assert!(report.records.is_empty());
    }

    #[test]
    fn full_mask_leaves_image_with_diagnostic() {
        let (img, _) = shadow_scene();
        let cfg = RelightConfig {
            superpixel_size: 100,
            ..RelightConfig::default()
        };
        let (out, report) = remove_shadows(&img, &ShadowMask::full(80, 60), &cfg).unwrap();
        assert_eq!(out, img);
        assert!(report.diagnostic.is_some());
        assert!(!report.records.is_empty());
    }

    #[test]
    fn uniform_multiplicative_shadow_is_inverted() {
        let (img, mask) = shadow_scene();
        let cfg = RelightConfig {
            superpixel_size: 100,
            ..RelightConfig::default()
        };
        let (out, report) = remove_shadows(&img, &mask, &cfg).unwrap();
        let core = crate::penumbra::erode(&mask, 3);
        let (mut got, mut n) = (0.0, 0.0);
        for p in 0..core.len() {
            if core.at(p) {
                got += out.at(p, 1);
                n += 1.0;
            }
        }
        let mean = got / n;
        assert!((mean - 0.6).abs() / 0.6 < 0.02, "restored mean {mean}");
        assert_eq!(report.fallback_count, 0);
        let shadow_count = report.records.len();
        assert!(shadow_count > 0);
        let band = dilate(&mask, cfg.penumbra_radius);
        for p in 0..mask.len() {
            if !band.at(p) {
                assert_eq!(out.at(p, 0), img.at(p, 0));
            }
        }
    }

    #[test]
    fn processing_order_does_not_matter() {
        let (img, mask) = shadow_scene();
        let cfg = RelightConfig {
            superpixel_size: 64,
            ..RelightConfig::default()
        };
        let (a, _) = remove_shadows_ordered(&img, &mask, &cfg, ProcessingOrder::Ascending).unwrap();
        for order in [
            ProcessingOrder::Descending,
            ProcessingOrder::Shuffled(9),
            ProcessingOrder::Parallel,
        ] {
            let (b, _) = remove_shadows_ordered(&img, &mask, &cfg, order).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn report_lists_each_shadow_region_once() {
        let (img, mask) = shadow_scene();
        let cfg = RelightConfig {
            superpixel_size: 100,
            ..RelightConfig::default()
        };
        let (_, report) = remove_shadows(&img, &mask, &cfg).unwrap();
        let mut ids: Vec<usize> = report.records.iter().map(|r| r.shadow_id).collect();
        ids.dedup();
        assert_eq!(ids.len(), report.records.len());
        let mut buf = Vec::new();
        report.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().filter(|l| !l.starts_with('#')).count(),
            report.records.len()
        );
    }

    #[test]
    fn mismatched_mask_is_rejected() {
        let (img, _) = shadow_scene();
        let err = remove_shadows(&img, &ShadowMask::empty(10, 10), &RelightConfig::default());
        assert!(matches!(err, Err(Error::Dimension(_))));
    }
}
