//! Five-scale MS-SSIM with an 11-tap Gaussian window (σ = 1.5).
//!
//! Follows the widely used TensorFlow formulation: 'valid' filtering, the
//! luminance term only at the coarsest scale, contrast-structure terms
//! clipped at zero, 2×2 mean pooling with edge replication for odd sizes, and
//! the final value averaged over channels.
//!
//! Scales narrower than the window use the largest odd window that fits, so
//! images down to [`MIN_DIMENSION`] pixels are accepted. At 176 pixels and up
//! this never triggers and results match the fixed-window definition.

use crate::error::{Error, Result};
use crate::numeric::mean;

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;
pub const WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
pub const SCALES: usize = WEIGHTS.len();

/// Smallest edge for which every scale keeps at least one pixel.
pub const MIN_DIMENSION: usize = 1 << (SCALES - 1);

/// Smallest edge at which the full 11-tap window fits every scale.
pub const FULL_WINDOW_DIMENSION: usize = WINDOW << (SCALES - 1);

const C1: f64 = K1 * K1;
const C2: f64 = K2 * K2;

#[derive(Clone)]
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Plane {
    fn map2(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        Plane {
            w: self.w,
            h: self.h,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// 2×2 mean pooling; odd edges are extended by replicating the last row or column.
    fn downsample(&self) -> Plane {
        let (w2, h2) = (self.w.div_ceil(2), self.h.div_ceil(2));
        let at = |x: usize, y: usize| self.data[y.min(self.h - 1) * self.w + x.min(self.w - 1)];
        let mut data = Vec::with_capacity(w2 * h2);
        for y in 0..h2 {
            for x in 0..w2 {
                let (x0, y0) = (2 * x, 2 * y);
                data.push((at(x0, y0) + at(x0 + 1, y0) + at(x0, y0 + 1) + at(x0 + 1, y0 + 1)) / 4.0);
            }
        }
        Plane { w: w2, h: h2, data }
    }
}

fn gaussian_taps(size: usize) -> Vec<f64> {
    let center = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-0.5 * (i as f64 - center).powi(2) / (SIGMA * SIGMA)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// `out[i] = t * (a[i] + b[i])` or `+=` when `accumulate`; written with
/// equal-length slices so the loop vectorizes.
#[inline(always)]
fn tap_pair(out: &mut [f64], a: &[f64], b: &[f64], t: f64, accumulate: bool) {
    let n = out.len();
    let (a, b) = (&a[..n], &b[..n]);
    if accumulate {
        for i in 0..n {
            out[i] += t * (a[i] + b[i]);
        }
    } else {
        for i in 0..n {
            out[i] = t * (a[i] + b[i]);
        }
    }
}

/// Separable 'valid' convolution. The taps are symmetric, so mirrored
/// samples are added before multiplying.
fn filter_valid(p: &Plane, taps: &[f64]) -> Plane {
    let k = taps.len();
    let half = k / 2;
    let (ow, oh) = (p.w - k + 1, p.h - k + 1);
    let center = taps[half] / 2.0;
    let mut rows = vec![0.0; ow * p.h];
    for (out, src) in rows.chunks_exact_mut(ow).zip(p.data.chunks_exact(p.w)) {
        tap_pair(out, &src[half..], &src[half..], center, false);
        for j in 0..half {
            tap_pair(out, &src[j..], &src[k - 1 - j..], taps[j], true);
        }
    }
    let mut data = vec![0.0; ow * oh];
    for (y, out) in data.chunks_exact_mut(ow).enumerate() {
        let row = |j: usize| &rows[(y + j) * ow..];
        tap_pair(out, row(half), row(half), center, false);
        for j in 0..half {
            tap_pair(out, row(j), row(k - 1 - j), taps[j], true);
        }
    }
    Plane { w: ow, h: oh, data }
}

/// Mean SSIM and mean contrast-structure term at one scale.
fn ssim_terms(x: &Plane, y: &Plane) -> (f64, f64) {
    let side = x.w.min(x.h).min(WINDOW);
    let taps = gaussian_taps(if side % 2 == 0 { side - 1 } else { side });
    let mx = filter_valid(x, &taps);
    let my = filter_valid(y, &taps);
    let sxy = filter_valid(&x.map2(y, |a, b| a * b), &taps);
    let ssq = filter_valid(&x.map2(y, |a, b| a * a + b * b), &taps);
    let n = mx.data.len();
    let mut ssim = Vec::with_capacity(n);
    let mut cs = Vec::with_capacity(n);
    for i in 0..n {
        let num0 = 2.0 * mx.data[i] * my.data[i];
        let den0 = mx.data[i] * mx.data[i] + my.data[i] * my.data[i];
        let luminance = (num0 + C1) / (den0 + C1);
        let c = (2.0 * sxy.data[i] - num0 + C2) / (ssq.data[i] - den0 + C2);
        ssim.push(luminance * c);
        cs.push(c);
    }
    (mean(&ssim), mean(&cs))
}

/// MS-SSIM of one row-major channel pair.
pub fn ms_ssim_channel(x: &[f64], y: &[f64], width: usize, height: usize) -> Result<f64> {
    if x.len() != width * height || y.len() != width * height {
        return Err(Error::InvalidConfig(format!(
            "planes of {} and {} samples for a {width}x{height} image",
            x.len(),
            y.len()
        )));
    }
    if width.min(height) < MIN_DIMENSION {
        return Err(Error::ImageTooSmall {
            width,
            height,
            min: MIN_DIMENSION,
        });
    }
    let mut px = Plane { w: width, h: height, data: x.to_vec() };
    let mut py = Plane { w: width, h: height, data: y.to_vec() };
    let mut value = 1.0;
    for (k, &weight) in WEIGHTS.iter().enumerate() {
        if k > 0 {
            px = px.downsample();
            py = py.downsample();
        }
        let (ssim, cs) = ssim_terms(&px, &py);
        let term = if k + 1 == SCALES { ssim } else { cs };
        value *= term.max(0.0).powf(weight);
    }
    Ok(value)
}
