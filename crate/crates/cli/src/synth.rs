//! Synthetic multiplicative-shadow scenes with known ground truth.
//!
//! Each scene is a textured background of one base color. One or two convex
//! polygons are darkened by per-channel factors in `[0.2, 0.7]`, with a 2-px
//! linear ramp just outside the polygon standing in for a penumbra. The mask
//! is the polygon itself. Because the darkening is exactly multiplicative and
//! the albedo statistics match across the image, a correct relighting restores
//! the polygon interior to the ground truth.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use umbra_core::imagecore::{rgb_to_gray, save_mask, save_png};
use umbra_core::metrics::{RegionPair, RegionPairAnnotation};
use umbra_core::penumbra::{dilate, erode};
use umbra_core::{ImageBuffer, ShadowMask};

use crate::CliError;

/// Width of the outward ramp.
pub const RAMP_WIDTH: usize = 2;
/// Annotation reference ring, as L1 distances outside the polygon.
pub const REFERENCE_RING: (usize, usize) = (8, 16);
/// Shadow-side annotation keeps pixels at least this far inside the polygon.
pub const INTERIOR_MARGIN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Texture {
    Checker,
    Gradient,
    Noise,
}

impl Texture {
    pub fn name(self) -> &'static str {
        match self {
            Texture::Checker => "checker",
            Texture::Gradient => "gradient",
            Texture::Noise => "noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowPolygon {
    pub vertices: Vec<(f64, f64)>,
    pub factors: [f64; 3],
}

impl ShadowPolygon {
    /// Whether the point lies inside the (convex, counter-clockwise) polygon.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let (ax, ay) = self.vertices[i];
            let (bx, by) = self.vertices[(i + 1) % n];
            (bx - ax) * (y - ay) - (by - ay) * (x - ax) >= 0.0
        })
    }

    /// Pixels whose centers fall inside the polygon.
    pub fn rasterize(&self, size: usize) -> ShadowMask {
        ShadowMask::from_fn(size, size, |c, r| {
            self.contains(c as f64 + 0.5, r as f64 + 0.5)
        })
    }
}

#[derive(Debug, Clone)]
pub struct SynthScene {
    pub name: String,
    pub base: [f64; 3],
    pub texture: Texture,
    pub polygons: Vec<ShadowPolygon>,
    /// Shadow-free image.
    pub ground_truth: ImageBuffer,
    pub image: ImageBuffer,
    pub mask: ShadowMask,
    /// One mask per polygon, same order as `polygons`.
    pub polygon_masks: Vec<ShadowMask>,
    pub annotation: RegionPairAnnotation,
}

impl SynthScene {
    /// Expected raw SRI of polygon `i`: gray level of the darkened base color
    /// over that of the base color.
    pub fn expected_sri(&self, i: usize) -> f64 {
        gray_of(mul(self.base, self.polygons[i].factors)) / gray_of(self.base)
    }

    /// Expected raw CD of polygon `i` on the 0–255 scale.
    pub fn expected_cd(&self, i: usize) -> f64 {
        let f = self.polygons[i].factors;
        (0..3).map(|c| self.base[c] * (1.0 - f[c])).sum::<f64>() * 255.0 / 3.0
    }

    pub fn metadata(&self) -> String {
        let mut s = format!(
            "name = {}\ntexture = {}\nbase = {:.6} {:.6} {:.6}\n",
            self.name,
            self.texture.name(),
            self.base[0],
            self.base[1],
            self.base[2]
        );
        for (i, p) in self.polygons.iter().enumerate() {
            s += &format!(
                "polygon{} factors = {:.6} {:.6} {:.6}\npolygon{} expected_sri = {:.6}\npolygon{} expected_cd = {:.6}\n",
                i + 1,
                p.factors[0],
                p.factors[1],
                p.factors[2],
                i + 1,
                self.expected_sri(i),
                i + 1,
                self.expected_cd(i)
            );
        }
        s
    }

    /// Writes `images/`, `masks/`, `gt/`, `annotations/` and `meta/` entries.
    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        for sub in ["images", "masks", "gt", "annotations", "meta"] {
            let dir = out_dir.join(sub);
            std::fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir, source })?;
        }
        let png = format!("{}.png", self.name);
        save_png(&self.image, out_dir.join("images").join(&png))?;
        save_mask(&self.mask, out_dir.join("masks").join(&png))?;
        save_png(&self.ground_truth, out_dir.join("gt").join(&png))?;
        self.annotation
            .save(&out_dir.join("annotations").join(&png))?;
        let meta = out_dir.join("meta").join(format!("{}.txt", self.name));
        std::fs::File::create(&meta)
            .and_then(|mut f| f.write_all(self.metadata().as_bytes()))
            .map_err(|source| CliError::Io { path: meta, source })
    }
}

fn mul(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] * b[0], a[1] * b[1], a[2] * b[2]]
}

fn gray_of(rgb: [f64; 3]) -> f64 {
    let px = ImageBuffer::from_fn(1, 1, |_, _| rgb);
    rgb_to_gray(&px).expect("3-channel pixel").at(0, 0)
}

fn random_polygon(
    rng: &mut ChaCha8Rng,
    size: usize,
    placed: &[(f64, f64, f64)],
) -> Option<((f64, f64, f64), ShadowPolygon)> {
    let s = size as f64;
    let margin = REFERENCE_RING.1 as f64 + 4.0;
    for _ in 0..200 {
        let radius = rng.gen_range(0.12 * s..0.19 * s);
        let stretch: f64 = rng.gen_range(0.75..1.25);
        let extent = radius * stretch.max(1.0 / stretch);
        let lo = extent + margin;
        if 2.0 * lo >= s {
            return None;
        }
        let (cx, cy) = (rng.gen_range(lo..s - lo), rng.gen_range(lo..s - lo));
        let clear = placed.iter().all(|&(px, py, pr)| {
            let gap = ((px - cx).powi(2) + (py - cy).powi(2)).sqrt() - pr - extent;
            gap > 2.0 * margin
        });
        if !clear {
            continue;
        }
        let n = rng.gen_range(5..=8);
        let step = TAU / n as f64;
        let phase = rng.gen_range(0.0..TAU);
        let vertices = (0..n)
            .map(|k| {
                let theta = phase + k as f64 * step + rng.gen_range(-0.3..0.3) * step;
                (
                    cx + radius * stretch * theta.cos(),
                    cy + radius / stretch * theta.sin(),
                )
            })
            .collect();
        let factors = [0; 3].map(|_| rng.gen_range(0.2..0.7));
        return Some(((cx, cy, extent), ShadowPolygon { vertices, factors }));
    }
    None
}

/// Deterministic scene `index` of the stream seeded by `seed`.
pub fn generate(seed: u64, index: usize, size: usize) -> Result<SynthScene, CliError> {
    if size < 128 {
        return Err(CliError::Config(format!(
            "synthetic scenes need size >= 128, got {size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let base = [0; 3].map(|_| rng.gen_range(0.35..0.75));
    let texture = match rng.gen_range(0..3) {
        0 => Texture::Checker,
        1 => Texture::Gradient,
        _ => Texture::Noise,
    };
    let s = size as f64;
    let tilt = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let ground_truth = ImageBuffer::from_fn(size, size, |col, row| {
        let t = match texture {
            Texture::Checker => {
                if (col / 2 + row / 2) % 2 == 0 {
                    1.06
                } else {
                    0.94
                }
            }
            Texture::Gradient => {
                1.0 + 0.04 * (tilt.0 * (col as f64 / s - 0.5) + tilt.1 * (row as f64 / s - 0.5))
            }
            Texture::Noise => 1.0 + rng.gen_range(-0.08..0.08),
        };
        [0, 1, 2].map(|c| (base[c] * t + rng.gen_range(-0.01..0.01)).clamp(0.0, 1.0))
    });

    let mut placed = Vec::new();
    let mut polygons = Vec::new();
    let wanted = rng.gen_range(1..=2);
    while polygons.len() < wanted {
        match random_polygon(&mut rng, size, &placed) {
            Some((disc, poly)) => {
                placed.push(disc);
                polygons.push(poly);
            }
            None => break,
        }
    }
    if polygons.is_empty() {
        return Err(CliError::Config(format!(
            "could not place a shadow polygon in a {size}px scene"
        )));
    }

    let polygon_masks: Vec<ShadowMask> = polygons.iter().map(|p| p.rasterize(size)).collect();
    let mut mask = ShadowMask::empty(size, size);
    for m in &polygon_masks {
        for p in 0..m.len() {
            if m.at(p) {
                mask.set(p % size, p / size, true);
            }
        }
    }

    let mut image = ground_truth.clone();
    for (poly, pm) in polygons.iter().zip(&polygon_masks) {
        // level d outside the polygon keeps (1 - a) d / (RAMP_WIDTH + 1) of the lost light
        let mut rings = vec![pm.clone()];
        for d in 1..=RAMP_WIDTH {
            rings.push(dilate(pm, d));
        }
        for p in 0..pm.len() {
            let level = rings.iter().position(|ring| ring.at(p));
            let Some(d) = level else { continue };
            if d > 0 && mask.at(p) {
                continue;
            }
            for c in 0..3 {
                let a = poly.factors[c];
                let f = a + (1.0 - a) * d as f64 / (RAMP_WIDTH + 1) as f64;
                image.set(p, c, image.at(p, c) * f);
            }
        }
    }

    let mut pairs = Vec::new();
    for (i, pm) in polygon_masks.iter().enumerate() {
        let others = ShadowMask::from_fn(size, size, |c, r| {
            polygon_masks
                .iter()
                .enumerate()
                .any(|(j, m)| j != i && m.get(c, r))
        });
        let near_others = dilate(&others, REFERENCE_RING.1);
        let ring = dilate(pm, REFERENCE_RING.1).minus(&dilate(pm, REFERENCE_RING.0));
        let inner = erode(pm, INTERIOR_MARGIN);
        pairs.push(RegionPair {
            id: (i + 1) as u8,
            shadow: (0..pm.len()).filter(|&p| inner.at(p)).collect(),
            reference: (0..pm.len())
                .filter(|&p| ring.at(p) && !near_others.at(p))
                .collect(),
        });
    }
    let annotation = RegionPairAnnotation::new(size, size, pairs)?;

    Ok(SynthScene {
        name: format!("synth_{seed}_{index:04}"),
        base,
        texture,
        polygons,
        ground_truth,
        image,
        mask,
        polygon_masks,
        annotation,
    })
}

/// Generates and writes `count` scenes.
pub fn write_suite(
    out_dir: &Path,
    seed: u64,
    count: usize,
    size: usize,
) -> Result<Vec<SynthScene>, CliError> {
    let scenes = (0..count)
        .map(|i| generate(seed, i, size))
        .collect::<Result<Vec<_>, _>>()?;
    for scene in &scenes {
        scene.write(out_dir)?;
    }
    Ok(scenes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use umbra_core::metrics::{cd_per_pair, sri_per_pair};

    #[test]
    fn same_seed_same_scene() {
        let a = generate(7, 3, 160).unwrap();
        let b = generate(7, 3, 160).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.mask, b.mask);
        assert_eq!(a.annotation, b.annotation);
        let c = generate(7, 4, 160).unwrap();
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn mask_is_exactly_the_darkened_umbra() {
        for index in 0..6 {
            let scene = generate(11, index, 192).unwrap();
            let outer = dilate(&scene.mask, RAMP_WIDTH);
            for p in 0..scene.mask.len() {
                let changed = (0..3).any(|c| scene.image.at(p, c) != scene.ground_truth.at(p, c));
                if scene.mask.at(p) {
                    assert!(changed);
                    let poly = scene.polygon_masks.iter().position(|m| m.at(p)).unwrap();
                    for c in 0..3 {
                        let want = scene.ground_truth.at(p, c) * scene.polygons[poly].factors[c];
                        assert!((scene.image.at(p, c) - want).abs() < 1e-12);
                    }
                } else if !outer.at(p) {
                    assert!(!changed);
                }
            }
        }
    }

    #[test]
    fn ramp_is_linear_outside_polygon() {
        let scene = generate(5, 0, 192).unwrap();
        let pm = &scene.polygon_masks[0];
        let a = scene.polygons[0].factors;
        let ring1 = dilate(pm, 1).minus(pm);
        let p = (0..pm.len())
            .find(|&p| ring1.at(p) && !scene.mask.at(p))
            .unwrap();
        for c in 0..3 {
            let want = scene.ground_truth.at(p, c) * (a[c] + (1.0 - a[c]) / 3.0);
            assert!((scene.image.at(p, c) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn raw_scores_match_factors() {
        for index in 0..8 {
            let scene = generate(21, index, 256).unwrap();
            let sri = sri_per_pair(&scene.image, &scene.annotation).unwrap();
            let cd = cd_per_pair(&scene.image, &scene.annotation).unwrap();
            for i in 0..scene.polygons.len() {
                assert!(
                    (sri[i] - scene.expected_sri(i)).abs() < 0.02,
                    "sri {} vs {}",
                    sri[i],
                    scene.expected_sri(i)
                );
                assert!(
                    (cd[i] - scene.expected_cd(i)).abs() < 2.0,
                    "cd {} vs {}",
                    cd[i],
                    scene.expected_cd(i)
                );
            }
        }
    }

    #[test]
    fn annotation_pairs_are_large_enough() {
        for index in 0..10 {
            let scene = generate(3, index, 256).unwrap();
            assert_eq!(scene.annotation.pairs().len(), scene.polygons.len());
            for pair in scene.annotation.pairs() {
                assert!(pair.shadow.len() >= 50 && pair.reference.len() >= 50);
            }
        }
    }

    #[test]
    fn writes_all_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let scenes = write_suite(dir.path(), 1, 2, 128).unwrap();
        for s in &scenes {
            for sub in ["images", "masks", "gt", "annotations"] {
                assert!(dir
                    .path()
                    .join(sub)
                    .join(format!("{}.png", s.name))
                    .is_file());
            }
            let meta =
                std::fs::read_to_string(dir.path().join("meta").join(format!("{}.txt", s.name)))
                    .unwrap();
            assert!(meta.contains("polygon1 expected_sri"));
        }
    }
}
