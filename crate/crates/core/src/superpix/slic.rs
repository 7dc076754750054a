//! SLIC run separately inside the shadow and non-shadow regions of a mask.
//!
//! Seeds: the region's pixels are ordered boustrophedon within horizontal
//! bands one grid interval tall, then cut into `ceil(count / target_size)`
//! equal runs; each run's middle pixel seeds a cluster. On a full rectangle
//! this is the usual regular grid, and it still yields exactly the requested
//! seed count on ragged or scattered regions.

use super::{classify_superpixels, SegmentationConfig, SuperpixelMap};
use crate::error::Result;
use crate::imagecore::{check_same_size, rgb_to_lab, ImageBuffer, ShadowMask};

const UNASSIGNED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Center {
    row: f64,
    col: f64,
    lab: [f64; 3],
}

/// Segments an RGB image with SLIC restricted to each side of `mask`.
pub fn slic_masked(
    rgb: &ImageBuffer,
    mask: &ShadowMask,
    cfg: &SegmentationConfig,
) -> Result<SuperpixelMap> {
    rgb.require_channels(3, "slic_masked")?;
    let lab = rgb_to_lab(rgb)?;
    slic_masked_lab(&lab, mask, cfg)
}

/// As [`slic_masked`], for an image already converted to Lab.
pub fn slic_masked_lab(
    lab: &ImageBuffer,
    mask: &ShadowMask,
    cfg: &SegmentationConfig,
) -> Result<SuperpixelMap> {
    cfg.validate()?;
    lab.require_channels(3, "slic_masked_lab")?;
    check_same_size(lab, mask, "image vs mask")?;

    let (shadow, lit) = rayon::join(
        || cluster_region(lab, mask, true, cfg),
        || cluster_region(lab, mask, false, cfg),
    );
    let raw: Vec<u32> = (0..mask.len())
        .map(|p| if mask.at(p) { shadow[p] } else { lit[p] })
        .collect();
    let min_size = (cfg.target_size / 4).max(1);
    let labels = enforce_connectivity(lab, mask, &raw, min_size);
    let map = SuperpixelMap::from_labels(lab.width(), lab.height(), labels)?;
    classify_superpixels(map, mask)
}

fn seed_centers(lab: &ImageBuffer, members: &[usize], target: usize, step: f64) -> Vec<Center> {
    let width = lab.width();
    let mut order = members.to_vec();
    order.sort_by_key(|&p| {
        let (row, col) = (p / width, p % width);
        let band = (row as f64 / step) as usize;
        let along = if band % 2 == 0 { col } else { width - 1 - col };
        (band, along, row)
    });
    let total = order.len();
    let k = total.div_ceil(target);
    (0..k)
        .map(|j| {
            let (lo, hi) = (j * total / k, (j + 1) * total / k);
            let seed = order[(lo + hi) / 2];
            let mut sum = [0.0; 3];
            for &p in &order[lo..hi] {
                for (c, s) in sum.iter_mut().enumerate() {
                    *s += lab.at(p, c);
                }
            }
            let cnt = (hi - lo) as f64;
            Center {
                row: (seed / width) as f64,
                col: (seed % width) as f64,
                lab: sum.map(|s| s / cnt),
            }
        })
        .collect()
}

/// Per-pixel cluster index for pixels where `mask == want`; others stay unassigned.
fn cluster_region(
    lab: &ImageBuffer,
    mask: &ShadowMask,
    want: bool,
    cfg: &SegmentationConfig,
) -> Vec<u32> {
    let (width, height) = (lab.width(), lab.height());
    let n = width * height;
    let mut labels = vec![UNASSIGNED; n];
    let members: Vec<usize> = (0..n).filter(|&p| mask.at(p) == want).collect();
    if members.is_empty() {
        return labels;
    }
    let step = (cfg.target_size as f64).sqrt();
    let spatial = (cfg.compactness / step).powi(2);
    let mut centers = seed_centers(lab, &members, cfg.target_size, step);
    let (l, a, b) = (lab.channel(0), lab.channel(1), lab.channel(2));
    let mut dist = vec![f64::INFINITY; n];

    for _ in 0..cfg.iterations {
        for &p in &members {
            dist[p] = f64::INFINITY;
            labels[p] = UNASSIGNED;
        }
        for (k, c) in centers.iter().enumerate() {
            let r0 = (c.row - step).floor().max(0.0) as usize;
            let r1 = ((c.row + step).ceil() as usize).min(height - 1);
            let c0 = (c.col - step).floor().max(0.0) as usize;
            let c1 = ((c.col + step).ceil() as usize).min(width - 1);
            for row in r0..=r1 {
                let dr = row as f64 - c.row;
                for col in c0..=c1 {
                    let p = row * width + col;
                    if mask.at(p) != want {
                        continue;
                    }
                    let dc = col as f64 - c.col;
                    let dl = l[p] - c.lab[0];
                    let da = a[p] - c.lab[1];
                    let db = b[p] - c.lab[2];
                    let d = dl * dl + da * da + db * db + (dr * dr + dc * dc) * spatial;
                    if d < dist[p] {
                        dist[p] = d;
                        labels[p] = k as u32;
                    }
                }
            }
        }
        let mut sums = vec![[0.0f64; 6]; centers.len()];
        for &p in &members {
            let k = labels[p];
            if k == UNASSIGNED {
                continue;
            }
            let s = &mut sums[k as usize];
            s[0] += (p / width) as f64;
            s[1] += (p % width) as f64;
            s[2] += l[p];
            s[3] += a[p];
            s[4] += b[p];
            s[5] += 1.0;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[5] > 0.0 {
                c.row = s[0] / s[5];
                c.col = s[1] / s[5];
                c.lab = [s[2] / s[5], s[3] / s[5], s[4] / s[5]];
            }
        }
    }
    labels
}

struct Component {
    shadow: bool,
    size: usize,
    lab_sum: [f64; 3],
}

/// Splits clusters into 4-connected pieces, folds pieces smaller than
/// `min_size` into the adjacent same-side piece with the nearest mean Lab,
/// and returns dense labels (shadow side first).
fn enforce_connectivity(
    lab: &ImageBuffer,
    mask: &ShadowMask,
    raw: &[u32],
    min_size: usize,
) -> Vec<u32> {
    let (width, height) = (lab.width(), lab.height());
    let n = width * height;
    let same = |p: usize, q: usize| mask.at(p) == mask.at(q) && raw[p] == raw[q];

    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Component> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut c = Component {
            shadow: mask.at(start),
            size: 0,
            lab_sum: [0.0; 3],
        };
        comp[start] = id;
        stack.push(start);
        while let Some(p) = stack.pop() {
            c.size += 1;
            for (ch, s) in c.lab_sum.iter_mut().enumerate() {
                *s += lab.at(p, ch);
            }
            let (row, col) = (p / width, p % width);
            let mut visit = |q: usize| {
                if comp[q] == usize::MAX && same(p, q) {
                    comp[q] = id;
                    stack.push(q);
                }
            };
            if col > 0 {
                visit(p - 1);
            }
            if col + 1 < width {
                visit(p + 1);
            }
            if row > 0 {
                visit(p - width);
            }
            if row + 1 < height {
                visit(p + width);
            }
        }
        comps.push(c);
    }

    let mut edges = Vec::new();
    for p in 0..n {
        let (row, col) = (p / width, p % width);
        for q in [
            (col + 1 < width).then(|| p + 1),
            (row + 1 < height).then(|| p + width),
        ]
        .into_iter()
        .flatten()
        {
            let (a, b) = (comp[p], comp[q]);
            if a != b && mask.at(p) == mask.at(q) {
                edges.push((a.min(b), a.max(b)));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let mut adjacent = vec![Vec::new(); comps.len()];
    for &(a, b) in &edges {
        adjacent[a].push(b);
        adjacent[b].push(a);
    }

    let mut group: Vec<Option<usize>> = comps
        .iter()
        .enumerate()
        .map(|(i, c)| (c.size >= min_size || adjacent[i].is_empty()).then_some(i))
        .collect();
    let mut group_sum: Vec<[f64; 3]> = comps.iter().map(|c| c.lab_sum).collect();
    let mut group_size: Vec<usize> = comps.iter().map(|c| c.size).collect();

    loop {
        let mut changed = false;
        for i in 0..comps.len() {
            if group[i].is_some() {
                continue;
            }
            let mean = comps[i].lab_sum.map(|s| s / comps[i].size as f64);
            let mut best: Option<(f64, usize)> = None;
            for &j in &adjacent[i] {
                let Some(g) = group[j] else { continue };
                let gm = group_sum[g].map(|s| s / group_size[g] as f64);
                let d: f64 = (0..3).map(|c| (mean[c] - gm[c]).powi(2)).sum();
                if best.is_none_or(|(bd, bg)| d < bd || (d == bd && g < bg)) {
                    best = Some((d, g));
                }
            }
            if let Some((_, g)) = best {
                group[i] = Some(g);
                for c in 0..3 {
                    group_sum[g][c] += comps[i].lab_sum[c];
                }
                group_size[g] += comps[i].size;
                changed = true;
            }
        }
        if !changed {
            // Only clusters of small pieces remain; promote the first so merging can proceed.
            match group.iter().position(Option::is_none) {
                Some(i) => group[i] = Some(i),
                None => break,
            }
        }
    }

    let mut dense = vec![u32::MAX; comps.len()];
    let mut next = 0u32;
    for side in [true, false] {
        for i in 0..comps.len() {
            if group[i] == Some(i) && comps[i].shadow == side {
                dense[i] = next;
                next += 1;
            }
        }
    }
    comp.iter()
        .map(|&c| dense[group[c].expect("every piece is grouped")])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpix::SuperpixelClass;

    fn gray(width: usize, height: usize) -> ImageBuffer {
        ImageBuffer::filled(width, height, &[0.5, 0.5, 0.5])
    }

    #[test]
    fn uniform_image_tiles_into_expected_count() {
        let img = gray(120, 120);
        let mask = ShadowMask::empty(120, 120);
        let map = slic_masked(&img, &mask, &SegmentationConfig::with_target_size(600)).unwrap();
        assert_eq!(map.len(), 14400usize.div_ceil(600));
        for sp in map.regions() {
            assert!(
                (300..=900).contains(&sp.len()),
                "superpixel of {} px",
                sp.len()
            );
            assert_eq!(sp.class, SuperpixelClass::NonShadow);
        }
        assert_eq!(map.regions().iter().map(|s| s.len()).sum::<usize>(), 14400);
    }

    #[test]
    fn all_shadow_mask_gives_shadow_superpixels() {
        let map = slic_masked(
            &gray(40, 30),
            &ShadowMask::full(40, 30),
            &SegmentationConfig::with_target_size(100),
        )
        .unwrap();
        assert!(map.regions().iter().all(|sp| sp.is_shadow()));
    }

    #[test]
    fn split_mask_is_never_crossed() {
        let img = ImageBuffer::from_fn(60, 40, |c, r| [c as f64 / 60.0, r as f64 / 40.0, 0.4]);
        let mask = ShadowMask::from_fn(60, 40, |c, _| c < 27);
        let map = slic_masked(&img, &mask, &SegmentationConfig::with_target_size(100)).unwrap();
        for sp in map.regions() {
            assert!(sp.shadow_fraction == 0.0 || sp.shadow_fraction == 1.0);
        }
        // shadow ids come first
        let first_lit = map.regions().iter().position(|s| !s.is_shadow()).unwrap();
        assert!(map.regions()[first_lit..].iter().all(|s| !s.is_shadow()));
    }

    #[test]
    fn tiny_isolated_component_becomes_its_own_superpixel() {
        let mask = ShadowMask::from_fn(50, 50, |c, r| {
            (10..13).contains(&c) && (10..13).contains(&r)
        });
        let map = slic_masked(&gray(50, 50), &mask, &SegmentationConfig::default()).unwrap();
        let shadow: Vec<_> = map.regions().iter().filter(|s| s.is_shadow()).collect();
        assert_eq!(shadow.len(), 1);
        assert_eq!(shadow[0].len(), 9);
    }

    #[test]
    fn empty_region_yields_no_superpixels_of_that_class() {
        let map = slic_masked(
            &gray(30, 30),
            &ShadowMask::empty(30, 30),
            &SegmentationConfig::with_target_size(100),
        )
        .unwrap();
        assert!(map.shadow_ids().is_empty());
        assert!(!map.nonshadow_ids().is_empty());
    }

    #[test]
    fn rejects_small_target_and_size_mismatch() {
        let img = gray(10, 10);
        assert!(slic_masked(
            &img,
            &ShadowMask::empty(10, 10),
            &SegmentationConfig::with_target_size(8)
        )
        .is_err());
        assert!(slic_masked(
            &img,
            &ShadowMask::empty(9, 10),
            &SegmentationConfig::default()
        )
        .is_err());
    }

    #[test]
    fn segmentation_is_deterministic() {
        let img = ImageBuffer::from_fn(64, 48, |c, r| {
            [
                ((c * 7 + r * 3) % 11) as f64 / 11.0,
                (c % 5) as f64 / 5.0,
                (r % 9) as f64 / 9.0,
            ]
        });
        let mask = ShadowMask::from_fn(64, 48, |c, r| {
            (c as isize - 30).abs() + (r as isize - 20).abs() < 15
        });
        let cfg = SegmentationConfig::with_target_size(64);
        let a = slic_masked(&img, &mask, &cfg).unwrap();
        let b = slic_masked(&img, &mask, &cfg).unwrap();
        assert_eq!(a.labels(), b.labels());
        assert_eq!(a.regions().iter().map(|s| s.len()).sum::<usize>(), 64 * 48);
    }

    #[test]
    fn scattered_regions_are_fully_labeled() {
        let mask = ShadowMask::from_fn(80, 80, |c, r| (c / 9 + r / 7) % 3 == 0);
        let img = ImageBuffer::from_fn(80, 80, |c, r| {
            [(c % 13) as f64 / 13.0, 0.5, (r % 4) as f64 / 4.0]
        });
        let map = slic_masked(&img, &mask, &SegmentationConfig::with_target_size(50)).unwrap();
        for sp in map.regions() {
            assert!(sp.shadow_fraction == 0.0 || sp.shadow_fraction == 1.0);
        }
    }
}
