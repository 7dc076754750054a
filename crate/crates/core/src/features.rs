//! Similarity between a shadow superpixel and a lit candidate.
//!
//! Three distances feed the contribution weight
//! `ω = 1 / (α·D_emd + β·D_lbp + γ·D_a + ε)`:
//!
//! * `D_emd`: sum of per-channel 1-D Wasserstein distances between the Lab
//!   marginal histograms, divided by 300;
//! * `D_lbp`: one minus the Bhattacharyya coefficient of the LBP histograms;
//! * `D_a`: absolute difference of mean a* values, divided by 128.

use crate::error::{Error, Result};
use crate::imagecore::ImageBuffer;
use crate::superpix::{Superpixel, LAB_RANGES};

const NORMALIZATION_TOL: f64 = 1e-6;

/// Clockwise from top-left, as `(row, col)` offsets. Bit `k` belongs to entry `k`.
const LBP_NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

/// 8-neighbor, radius-1 local binary patterns with replicated borders.
///
/// A bit is set when the neighbor is greater than or equal to the center, so
/// flat areas map to 255. Codes are stored as `code / 255`.
pub fn lbp_map(gray: &ImageBuffer) -> Result<ImageBuffer> {
    gray.require_channels(1, "lbp_map")?;
    let (w, h) = (gray.width() as isize, gray.height() as isize);
    let src = gray.channel(0);
    let mut out = Vec::with_capacity(src.len());
    for row in 0..h {
        for col in 0..w {
            let center = src[(row * w + col) as usize];
            let mut code = 0u32;
            for (bit, (dr, dc)) in LBP_NEIGHBORS.iter().enumerate() {
                let r = (row + dr).clamp(0, h - 1);
                let c = (col + dc).clamp(0, w - 1);
                if src[(r * w + c) as usize] >= center {
                    code |= 1 << bit;
                }
            }
            out.push(f64::from(code) / 255.0);
        }
    }
    ImageBuffer::from_planar(gray.width(), gray.height(), 1, out)
}

/// W₁ between two histograms on the same ascending support, via the CDF gap.
pub fn wasserstein_1d(p: &[f64], q: &[f64], bin_values: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.len() != bin_values.len() {
        return Err(Error::InvalidInput(format!(
            "histogram lengths differ: {}, {}, {} bin values",
            p.len(),
            q.len(),
            bin_values.len()
        )));
    }
    for (name, h) in [("p", p), ("q", q)] {
        let sum: f64 = h.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL || h.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "histogram {name} is not a distribution (sum {sum})"
            )));
        }
    }
    if bin_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "bin values must be strictly ascending".into(),
        ));
    }
    Ok(cdf_gap(p, q, bin_values))
}

#[inline]
fn cdf_gap(p: &[f64], q: &[f64], bin_values: &[f64]) -> f64 {
    let mut gap = 0.0;
    let mut total = 0.0;
    for k in 0..p.len().saturating_sub(1) {
        gap += p[k] - q[k];
        total += gap.abs() * (bin_values[k + 1] - bin_values[k]);
    }
    total
}

fn lab_centers(c: usize, bins: usize) -> Vec<f64> {
    let (lo, hi) = LAB_RANGES[c];
    let width = (hi - lo) / bins as f64;
    (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect()
}

/// Combined Lab EMD: `(d_L + d_a + d_b) / 300`, bins at their centers in native units.
pub fn emd_lab(sp_s: &Superpixel, sp_ns: &Superpixel) -> f64 {
    let mut total = 0.0;
    for c in 0..3 {
        let (p, q) = (&sp_s.lab_histograms[c], &sp_ns.lab_histograms[c]);
        assert_eq!(p.len(), q.len(), "Lab histograms use different bin counts");
        total += cdf_gap(p, q, &lab_centers(c, p.len()));
    }
    total / 300.0
}

/// Bhattacharyya coefficient `Σ sqrt(p·q)`.
pub fn bhattacharyya(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum()
}

/// `1 - ρ` over the LBP histograms.
pub fn lbp_distance(sp_s: &Superpixel, sp_ns: &Superpixel) -> f64 {
    (1.0 - bhattacharyya(&sp_s.lbp_histogram, &sp_ns.lbp_histogram)).max(0.0)
}

/// `|μa_s − μa_ns| / 128`.
pub fn a_mean_distance(sp_s: &Superpixel, sp_ns: &Superpixel) -> f64 {
    (sp_s.mean_a - sp_ns.mean_a).abs() / 128.0
}

/// Coefficients of the contribution weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self {
            alpha: 0.6,
            beta: 0.3,
            gamma: 0.1,
            epsilon: 1e-4,
        }
    }
}

impl WeightParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma, self.epsilon];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "weights must be non-negative and epsilon positive: {self:?}"
            )));
        }
        Ok(())
    }
}

pub fn contribution_weight(d_emd: f64, d_lbp: f64, d_amean: f64, params: &WeightParams) -> f64 {
    1.0 / (params.alpha * d_emd + params.beta * d_lbp + params.gamma * d_amean + params.epsilon)
}

/// The three distances and the resulting weight for one candidate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityBreakdown {
    pub d_emd: f64,
    pub d_lbp: f64,
    pub d_amean: f64,
    pub weight: f64,
}

impl SimilarityBreakdown {
    pub fn between(sp_s: &Superpixel, sp_ns: &Superpixel, params: &WeightParams) -> Self {
        let d_emd = emd_lab(sp_s, sp_ns);
        let d_lbp = lbp_distance(sp_s, sp_ns);
        let d_amean = a_mean_distance(sp_s, sp_ns);
        Self {
            d_emd,
            d_lbp,
            d_amean,
            weight: contribution_weight(d_emd, d_lbp, d_amean, params),
        }
    }
}
