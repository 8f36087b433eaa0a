//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rdok_core::image_io::ImagePlanes;
use rdok_core::metrics::{QualityAxis, RdCurve, RdPoint};

const MASK_BITS: u32 = 56;

pub fn splitmix64(s: u64) -> u64 {
    let mut z = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 8-bit raster, row-major, interleaved RGB.
#[derive(Clone)]
pub struct Raster {
    pub w: usize,
    pub h: usize,
    pub px: Vec<i64>,
}

impl Raster {
    pub fn from_fn(w: usize, h: usize, f: impl Fn(usize, usize, usize) -> i64) -> Self {
        let mut px = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    px.push(f(x, y, c));
                }
            }
        }
        Raster { w, h, px }
    }

    pub fn at(&self, x: usize, y: usize, c: usize) -> i64 {
        self.px[(y * self.w + x) * 3 + c]
    }

    pub fn map(&self, f: impl Fn(usize, usize, usize, i64) -> i64) -> Self {
        Raster::from_fn(self.w, self.h, |x, y, c| f(x, y, c, self.at(x, y, c)))
    }

    pub fn to_image(&self) -> ImagePlanes {
        ImagePlanes::from_fn(self.w, self.h, |x, y, c| self.at(x, y, c) as f64 / 255.0).unwrap()
    }
}

pub fn noise(seed: u64, w: usize, h: usize) -> Raster {
    Raster::from_fn(w, h, |x, y, c| {
        let key = (seed << 40) | ((c as u64) << 32) | ((y as u64) << 16) | x as u64;
        (splitmix64(key) >> MASK_BITS) as i64
    })
}

pub fn texture(w: usize, h: usize) -> Raster {
    Raster::from_fn(w, h, |x, y, c| {
        let (x, y, c) = (x as i64, y as i64, c as i64);
        (x * (3 + c) + y * 5 + (x * y) / 7) % 256
    })
}

/// The ten MS-SSIM conformance pairs with their float64 TensorFlow values,
/// produced by `tests/reference/msssim_reference.py`.
pub fn msssim_reference_pairs() -> Vec<(&'static str, Raster, Raster, f64)> {
    let mut out = Vec::new();

    out.push(("noise_vs_noise", noise(1, 176, 176), noise(2, 176, 176), 0.06626000877261475));

    let t = texture(192, 192);
    let n = noise(3, 192, 192);
    let y = t.map(|x, yy, c, v| (v + n.at(x, yy, c) / 16 - 8).clamp(0, 255));
    out.push(("texture_plus_noise", t, y, 0.9991278345115427));

    let b = noise(4, 180, 190).map(|_, _, _, v| (v >> 7) * 255);
    let inv = b.map(|_, _, _, v| 255 - v);
    out.push(("binary_vs_inverse", b, inv, 0.0));

    let t = texture(200, 181);
    let blur = t.map(|x, y, c, v| {
        let left = t.at(x.saturating_sub(1), y, c);
        let right = t.at((x + 1).min(t.w - 1), y, c);
        (v + left + right) / 3
    });
    out.push(("texture_vs_hblur", t, blur, 0.9859467669447336));

    let n = noise(5, 201, 177);
    let p = noise(6, 201, 177);
    let y = n.map(|x, yy, c, v| (v + p.at(x, yy, c) / 32 - 4).clamp(0, 255));
    out.push(("odd_noise_perturbed", n, y, 0.9995839994974149));

    let t = texture(256, 176);
    let shifted = t.map(|x, y, c, _| t.at(x.saturating_sub(1), y, c));
    out.push(("texture_vs_shift", t, shifted, 0.8872916482196125));

    out.push((
        "flat_vs_noise",
        Raster::from_fn(180, 176, |_, _, _| 128),
        noise(7, 180, 176),
        0.1535755208079083,
    ));

    let n = noise(8, 190, 190);
    let low = n.map(|_, _, _, v| 64 + v / 2);
    out.push(("noise_vs_low_contrast", n, low, 0.8445536953696982));

    let t = texture(177, 301);
    let post = t.map(|_, _, _, v| (v / 64) * 64);
    out.push(("texture_vs_posterized", t, post, 0.9856226256881198));

    let n = noise(9, 240, 240);
    let patched = n.map(|x, y, _, v| if (100..140).contains(&y) && (60..90).contains(&x) { 0 } else { v });
    out.push(("noise_vs_patch", n, patched, 0.7846092820582361));

    out
}

pub fn curve(rates: &[f64], ms: &[f64]) -> RdCurve {
    RdCurve::new(
        rates
            .iter()
            .zip(ms)
            .enumerate()
            .map(|(i, (&r, &m))| RdPoint {
                label: format!("Q{}", i + 1),
                rate_bpp: r,
                ms_ssim: m,
                psnr_db: 25.0 + 3.0 * i as f64 + r,
            })
            .collect(),
    )
    .unwrap()
}

pub fn scaled(c: &RdCurve, k: f64) -> RdCurve {
    RdCurve::new(
        c.points()
            .iter()
            .map(|p| RdPoint { rate_bpp: p.rate_bpp * k, ..p.clone() })
            .collect(),
    )
    .unwrap()
}

/// Cubic interpolation through four points, evaluated with Lagrange's formula.
fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    (0..xs.len())
        .map(|i| {
            let basis: f64 = (0..xs.len())
                .filter(|&j| j != i)
                .map(|j| (x - xs[j]) / (xs[i] - xs[j]))
                .product();
            ys[i] * basis
        })
        .sum()
}

/// BD-rate via composite Simpson integration of Lagrange interpolants.
pub fn simpson_bd_rate(anchor: &RdCurve, test: &RdCurve, axis: QualityAxis) -> f64 {
    let axes = |c: &RdCurve| -> (Vec<f64>, Vec<f64>) {
        c.points().iter().map(|p| (p.quality_db(axis), p.rate_bpp.log10())).unzip()
    };
    let (qa, ra) = axes(anchor);
    let (qt, rt) = axes(test);
    let lo = qa[0].max(qt[0]);
    let hi = qa[3].min(qt[3]);
    let n = 2000;
    let step = (hi - lo) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let q = lo + i as f64 * step;
        let wgt = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += wgt * (lagrange(&qt, &rt, q) - lagrange(&qa, &ra, q));
    }
    let avg = acc * step / 3.0 / (hi - lo);
    (10f64.powf(avg) - 1.0) * 100.0
}
