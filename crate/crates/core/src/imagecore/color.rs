use super::ImageBuffer;
use crate::error::Result;

// sRGB primaries to CIE XYZ, D65 white.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];
const WHITE_D65: [f64; 3] = [0.950_47, 1.0, 1.088_83];

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// IEC 61966-2-1 transfer function, encoded value to linear light.
#[inline]
pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.040_45 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Converts one gamma-encoded sRGB triple in `[0, 1]` to CIE L*a*b* (D65).
pub fn lab_pixel(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let mut xyz = [0.0; 3];
    for (out, row) in xyz.iter_mut().zip(RGB_TO_XYZ.iter()) {
        *out = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / WHITE_D65[0]);
    let fy = lab_f(xyz[1] / WHITE_D65[1]);
    let fz = lab_f(xyz[2] / WHITE_D65[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// RGB image to L*a*b*. Channels stay in native units (L in `[0, 100]`).
pub fn rgb_to_lab(img: &ImageBuffer) -> Result<ImageBuffer> {
    img.require_channels(3, "rgb_to_lab")?;
    let n = img.pixel_count();
    let mut data = vec![0.0; 3 * n];
    for idx in 0..n {
        let lab = lab_pixel(img.rgb(idx));
        data[idx] = lab[0];
        data[n + idx] = lab[1];
        data[2 * n + idx] = lab[2];
    }
    ImageBuffer::from_planar(img.width(), img.height(), 3, data)
}

fn hsv_pixel([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    [if h >= 1.0 { h - 1.0 } else { h }, s, max]
}

fn rgb_pixel([h, s, v]: [f64; 3]) -> [f64; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as u8 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

fn map_pixels(img: &ImageBuffer, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<ImageBuffer> {
    let n = img.pixel_count();
    let mut data = vec![0.0; 3 * n];
    for idx in 0..n {
        let px = f(img.rgb(idx));
        for c in 0..3 {
            data[c * n + idx] = px[c];
        }
    }
    ImageBuffer::from_planar(img.width(), img.height(), 3, data)
}

/// Hexcone HSV; hue wraps in `[0, 1)`.
pub fn rgb_to_hsv(img: &ImageBuffer) -> Result<ImageBuffer> {
    img.require_channels(3, "rgb_to_hsv")?;
    map_pixels(img, hsv_pixel)
}

pub fn hsv_to_rgb(img: &ImageBuffer) -> Result<ImageBuffer> {
    img.require_channels(3, "hsv_to_rgb")?;
    map_pixels(img, rgb_pixel)
}

/// Rec. 601 luma. A single-channel input is returned unchanged.
pub fn rgb_to_gray(img: &ImageBuffer) -> Result<ImageBuffer> {
    if img.channels() == 1 {
        return Ok(img.clone());
    }
    img.require_channels(3, "rgb_to_gray")?;
    let n = img.pixel_count();
    let data = (0..n)
        .map(|idx| {
            let [r, g, b] = img.rgb(idx);
            LUMA[0] * r + LUMA[1] * g + LUMA[2] * b
        })
        .collect();
    ImageBuffer::from_planar(img.width(), img.height(), 1, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent sRGB -> XYZ -> Lab following the CIE epsilon/kappa formulation,
    /// with the reference white derived from the primaries' row sums.
    fn oracle_lab(rgb: [f64; 3]) -> [f64; 3] {
        let lin: Vec<f64> = rgb
            .iter()
            .map(|&c| {
                if c > 0.04045 {
                    ((c + 0.055) / 1.055).powf(2.4)
                } else {
                    c / 12.92
                }
            })
            .collect();
        let m = [
            [0.4124, 0.3576, 0.1805],
            [0.2126, 0.7152, 0.0722],
            [0.0193, 0.1192, 0.9505],
        ];
        let xyz: Vec<f64> = m
            .iter()
            .map(|row| row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2])
            .collect();
        let white: Vec<f64> = m.iter().map(|row| row.iter().sum()).collect();
        let eps = 216.0 / 24389.0;
        let kappa = 24389.0 / 27.0;
        let f = |t: f64| {
            if t > eps {
                t.powf(1.0 / 3.0)
            } else {
                (kappa * t + 16.0) / 116.0
            }
        };
        let fx = f(xyz[0] / white[0]);
        let fy = f(xyz[1] / white[1]);
        let fz = f(xyz[2] / white[2]);
        [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
    }

    fn single(rgb: [f64; 3]) -> ImageBuffer {
        ImageBuffer::from_fn(1, 1, |_, _| rgb)
    }

    #[test]
    fn white_and_black_points() {
        let w = rgb_to_lab(&single([1.0, 1.0, 1.0])).unwrap();
        assert!((w.at(0, 0) - 100.0).abs() <= 0.5);
        assert!(w.at(0, 1).abs() <= 0.5);
        assert!(w.at(0, 2).abs() <= 0.5);
        let k = rgb_to_lab(&single([0.0, 0.0, 0.0])).unwrap();
        for c in 0..3 {
            assert!(k.at(0, c).abs() < 1e-9);
        }
    }

    #[test]
    fn lab_matches_oracle_on_fixed_triple() {
        let got = lab_pixel([0.5, 0.25, 0.1]);
        let want = oracle_lab([0.5, 0.25, 0.1]);
        for c in 0..3 {
            assert!((got[c] - want[c]).abs() <= 0.5, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn lab_matches_oracle_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let rgb = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            let got = lab_pixel(rgb);
            let want = oracle_lab(rgb);
            for c in 0..3 {
                assert!(
                    (got[c] - want[c]).abs() <= 0.5,
                    "{rgb:?}: {got:?} vs {want:?}"
                );
            }
        }
    }

    #[test]
    fn conversions_reject_single_channel() {
        let gray = ImageBuffer::filled(2, 2, &[0.5]);
        assert!(matches!(rgb_to_lab(&gray), Err(Error::Dimension(_))));
        assert!(matches!(rgb_to_hsv(&gray), Err(Error::Dimension(_))));
    }

    #[test]
    fn hsv_reference_points() {
        let red = rgb_to_hsv(&single([1.0, 0.0, 0.0])).unwrap();
        assert_eq!([red.at(0, 0), red.at(0, 1), red.at(0, 2)], [0.0, 1.0, 1.0]);
        let gray = rgb_to_hsv(&single([0.42, 0.42, 0.42])).unwrap();
        assert_eq!(gray.at(0, 1), 0.0);
        assert_eq!(gray.at(0, 2), 0.42);
    }

    #[test]
    fn gray_coefficients() {
        let g = rgb_to_gray(&ImageBuffer::from_fn(3, 1, |c, _| match c {
            0 => [1.0, 1.0, 1.0],
            1 => [0.0, 0.0, 0.0],
            _ => [1.0, 0.0, 0.0],
        }))
        .unwrap();
        assert_eq!(g.channels(), 1);
        assert!((g.at(0, 0) - 1.0).abs() < 1e-12);
        assert_eq!(g.at(1, 0), 0.0);
        assert!((g.at(2, 0) - 0.299).abs() < 1e-12);
    }

    #[test]
    fn conversions_are_deterministic() {
        let img = ImageBuffer::from_fn(4, 4, |c, r| [c as f64 / 4.0, r as f64 / 4.0, 0.3]);
        assert_eq!(rgb_to_lab(&img).unwrap(), rgb_to_lab(&img).unwrap());
    }

    proptest! {
        #[test]
        fn hsv_round_trip(r in 0.0..=1.0f64, g in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let img = single([r, g, b]);
            let back = hsv_to_rgb(&rgb_to_hsv(&img).unwrap()).unwrap();
            for c in 0..3 {
                prop_assert!((back.at(0, c) - img.at(0, c)).abs() < 1e-6);
            }
            let hsv = rgb_to_hsv(&img).unwrap();
            prop_assert!((0.0..1.0).contains(&hsv.at(0, 0)));
        }
    }
}
