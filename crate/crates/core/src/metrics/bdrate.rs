//! Rate-distortion points, curves and the Bjøntegaard delta rate.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quality axis used for BD-rate integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualityAxis {
    /// `−10·log10(1 − MS-SSIM)`.
    MsSsimDb,
    Psnr,
}

pub fn ms_ssim_db(ms_ssim: f64) -> f64 {
    -10.0 * (1.0 - ms_ssim).log10()
}

/// One operating point; also one CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub label: String,
    pub rate_bpp: f64,
    pub ms_ssim: f64,
    /// `inf` for a lossless reconstruction.
    pub psnr_db: f64,
}

impl RdPoint {
    /// MS-SSIM distortion `1 − MS-SSIM`.
    pub fn distortion(&self) -> f64 {
        1.0 - self.ms_ssim
    }

    pub fn quality_db(&self, axis: QualityAxis) -> f64 {
        match axis {
            QualityAxis::MsSsimDb => ms_ssim_db(self.ms_ssim),
            QualityAxis::Psnr => self.psnr_db,
        }
    }
}

/// Points ordered by strictly increasing rate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RdCurve {
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(points: Vec<RdPoint>) -> Result<Self> {
        for p in &points {
            if !(p.rate_bpp.is_finite() && p.rate_bpp > 0.0) {
                return Err(Error::InvalidCurve(format!(
                    "point '{}' has rate {}",
                    p.label, p.rate_bpp
                )));
            }
        }
        if let Some(w) = points.windows(2).find(|w| w[0].rate_bpp >= w[1].rate_bpp) {
            return Err(Error::InvalidCurve(format!(
                "rates not strictly increasing at '{}' ({}) -> '{}' ({})",
                w[0].label, w[0].rate_bpp, w[1].label, w[1].rate_bpp
            )));
        }
        Ok(RdCurve { points })
    }

    /// Sorts by rate first.
    pub fn from_unsorted(mut points: Vec<RdPoint>) -> Result<Self> {
        points.sort_by(|a, b| a.rate_bpp.total_cmp(&b.rate_bpp));
        Self::new(points)
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let points = r.deserialize().collect::<std::result::Result<Vec<RdPoint>, _>>()?;
        Self::new(points)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(file)
    }

    pub fn to_writer(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if self.points.is_empty() {
            w.write_record(["label", "rate_bpp", "ms_ssim", "psnr_db"])?;
        }
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }
}

/// Minimum points per curve for the cubic fit.
pub const BD_MIN_POINTS: usize = 4;

/// A fitted cubic in a normalized variable `t = (q − center) / scale`.
struct LogRateFit {
    center: f64,
    scale: f64,
    coeffs: [f64; 4],
}

impl LogRateFit {
    fn new(quality: &[f64], log_rate: &[f64]) -> Result<Self> {
        let lo = quality.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = quality.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let center = (lo + hi) / 2.0;
        let scale = ((hi - lo) / 2.0).max(f64::MIN_POSITIVE);
        let n = quality.len();
        let a = DMatrix::from_fn(n, 4, |i, j| ((quality[i] - center) / scale).powi(j as i32));
        let b = DVector::from_column_slice(log_rate);
        let sol = a
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| Error::InvalidCurve(format!("cubic fit failed: {e}")))?;
        Ok(LogRateFit {
            center,
            scale,
            coeffs: [sol[0], sol[1], sol[2], sol[3]],
        })
    }

    /// `∫ p(q) dq` over `[lo, hi]` in quality units.
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let antiderivative = |q: f64| {
            let t = (q - self.center) / self.scale;
            self.coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * t.powi(j as i32 + 1) / (j + 1) as f64)
                .sum::<f64>()
        };
        self.scale * (antiderivative(hi) - antiderivative(lo))
    }
}

fn curve_axes(curve: &RdCurve, axis: QualityAxis, name: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    if curve.len() < BD_MIN_POINTS {
        return Err(Error::InvalidCurve(format!(
            "{name} curve has {} points, need at least {BD_MIN_POINTS}",
            curve.len()
        )));
    }
    let quality: Vec<f64> = curve.points().iter().map(|p| p.quality_db(axis)).collect();
    if quality.iter().any(|q| !q.is_finite()) {
        return Err(Error::InvalidCurve(format!("{name} curve has non-finite quality")));
    }
    if quality.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidCurve(format!(
            "{name} curve quality is not strictly increasing with rate"
        )));
    }
    let log_rate = curve.points().iter().map(|p| p.rate_bpp.log10()).collect();
    Ok((quality, log_rate))
}

/// Result of a BD-rate comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdRate {
    /// Average rate difference in percent; negative means the test curve saves rate.
    pub percent: f64,
    /// Overlapping quality interval the fits were integrated over.
    pub interval: (f64, f64),
}

/// Bjøntegaard delta rate of `test` against `anchor`.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve, axis: QualityAxis) -> Result<BdRate> {
    let (qa, ra) = curve_axes(anchor, axis, "anchor")?;
    let (qt, rt) = curve_axes(test, axis, "test")?;
    let (a_lo, a_hi) = (qa[0], qa[qa.len() - 1]);
    let (t_lo, t_hi) = (qt[0], qt[qt.len() - 1]);
    let lo = a_lo.max(t_lo);
    let hi = a_hi.min(t_hi);
    if lo >= hi {
        return Err(Error::NoOverlap(a_lo, a_hi, t_lo, t_hi));
    }
    let fa = LogRateFit::new(&qa, &ra)?;
    let ft = LogRateFit::new(&qt, &rt)?;
    let avg = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
    Ok(BdRate {
        percent: (10f64.powf(avg) - 1.0) * 100.0,
        interval: (lo, hi),
    })
}
