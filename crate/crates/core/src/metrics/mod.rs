//! Distortion measures, the RDO and training losses, and BD-rate.
//!
//! Every measure works on the cropped region; padding never contributes.

mod bdrate;
pub mod msssim;

pub use bdrate::{bd_rate, ms_ssim_db, BdRate, QualityAxis, RdCurve, RdPoint, BD_MIN_POINTS};

use crate::error::{Error, Result};
use crate::image_io::{ImagePlanes, CHANNELS};

/// λ_e per quality preset, lowest rate first. Heavier rate weights go with
/// the coarser quantizers.
pub const LAMBDA_E_PRESETS: [f64; 4] = [0.5, 0.5, 0.25, 0.125];

/// Training-time rate weights paired with [`LAMBDA_E_PRESETS`] position by position.
pub const LAMBDA_T_PRESETS: [f64; 4] = [0.08, 0.04, 0.02, 0.01];

/// Weight of the MS-SSIM term in the training loss.
pub const TRAINING_MS_SSIM_WEIGHT: f64 = 0.1;

/// Looks up a training λ by its printed value, e.g. `"0.04"`.
pub fn lambda_t_by_name(name: &str) -> Option<f64> {
    let v: f64 = name.trim().parse().ok()?;
    LAMBDA_T_PRESETS.iter().copied().find(|&p| p == v)
}

fn check_dims(x: &ImagePlanes, y: &ImagePlanes) -> Result<()> {
    if x.width() != y.width() || x.height() != y.height() {
        return Err(Error::DimensionMismatch(x.width(), x.height(), y.width(), y.height()));
    }
    Ok(())
}

/// Mean squared error over all cropped samples of all channels.
pub fn mse(x: &ImagePlanes, y: &ImagePlanes) -> Result<f64> {
    check_dims(x, y)?;
    let (w, h, pw) = (x.width(), x.height(), x.padded_width());
    let mut total = 0.0;
    for c in 0..CHANNELS {
        let (a, b) = (x.plane(c), y.plane(c));
        for row in 0..h {
            let r = row * pw..row * pw + w;
            total += a[r.clone()].iter().zip(&b[r]).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
        }
    }
    Ok(total / (CHANNELS * w * h) as f64)
}

/// PSNR in dB for unit peak; `f64::INFINITY` marks a lossless reconstruction.
pub fn psnr(x: &ImagePlanes, y: &ImagePlanes) -> Result<f64> {
    Ok(psnr_from_mse(mse(x, y)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

/// Channel-averaged MS-SSIM of the cropped images.
pub fn ms_ssim(x: &ImagePlanes, y: &ImagePlanes) -> Result<f64> {
    check_dims(x, y)?;
    let (xc, yc) = (x.cropped_planes(), y.cropped_planes());
    let mut total = 0.0;
    for c in 0..CHANNELS {
        total += msssim::ms_ssim_channel(&xc[c], &yc[c], x.width(), x.height())?;
    }
    Ok(total / CHANNELS as f64)
}

fn check_lambda(name: &str, lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("{name} must be positive, got {lambda}")));
    }
    Ok(())
}

fn check_rate(rate_bpp: f64) -> Result<()> {
    if !(rate_bpp.is_finite() && rate_bpp >= 0.0) {
        return Err(Error::InvalidConfig(format!("rate must be non-negative, got {rate_bpp}")));
    }
    Ok(())
}

/// `D + λ_e·r` with `D = 1 − MS-SSIM`.
pub fn rdo_loss_from(distortion: f64, rate_bpp: f64, lambda_e: f64) -> Result<f64> {
    check_lambda("lambda_e", lambda_e)?;
    check_rate(rate_bpp)?;
    Ok(distortion + lambda_e * rate_bpp)
}

pub fn rdo_loss(x: &ImagePlanes, x_hat: &ImagePlanes, rate_bpp: f64, lambda_e: f64) -> Result<f64> {
    check_lambda("lambda_e", lambda_e)?;
    rdo_loss_from(1.0 - ms_ssim(x, x_hat)?, rate_bpp, lambda_e)
}

/// `MSE + 0.1·(1 − MS-SSIM) + λ_t·r`.
pub fn training_loss_from(mse: f64, ms_ssim_distortion: f64, rate_bpp: f64, lambda_t: f64) -> Result<f64> {
    check_lambda("lambda_t", lambda_t)?;
    check_rate(rate_bpp)?;
    Ok(mse + TRAINING_MS_SSIM_WEIGHT * ms_ssim_distortion + lambda_t * rate_bpp)
}

pub fn training_loss(x: &ImagePlanes, x_hat: &ImagePlanes, rate_bpp: f64, lambda_t: f64) -> Result<f64> {
    check_lambda("lambda_t", lambda_t)?;
    training_loss_from(mse(x, x_hat)?, 1.0 - ms_ssim(x, x_hat)?, rate_bpp, lambda_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(w: usize, h: usize, seed: u64) -> ImagePlanes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImagePlanes::from_fn(w, h, |_, _, _| rng.gen()).unwrap()
    }

    #[test]
    fn identical_images() {
        let x = random(180, 190, 1);
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        assert_eq!(psnr(&x, &x).unwrap(), f64::INFINITY);
        assert_eq!(ms_ssim(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn constant_offset() {
        let x = ImagePlanes::from_fn(70, 50, |x, y, c| ((x + 2 * y + c) % 9) as f64 / 10.0).unwrap();
        let y = ImagePlanes::from_fn(70, 50, |x, y, c| ((x + 2 * y + c) % 9) as f64 / 10.0 + 0.1).unwrap();
        assert!((mse(&x, &y).unwrap() - 0.01).abs() < 1e-15);
        assert!((psnr(&x, &y).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn mse_matches_two_loop_oracle() {
        let (x, y) = (random(100, 77, 2), random(100, 77, 3));
        let mut sum = 0.0;
        for c in 0..3 {
            for yy in 0..77 {
                for xx in 0..100 {
                    sum += (x.sample(c, xx, yy) - y.sample(c, xx, yy)).powi(2);
                }
            }
        }
        let oracle = sum / (3.0 * 100.0 * 77.0);
        assert!((mse(&x, &y).unwrap() - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn padding_is_ignored() {
        let x = random(70, 70, 4);
        let mut planes = x.planes().clone();
        // scribble over the padding only
        for p in planes.iter_mut() {
            for row in 0..x.padded_height() {
                for col in 0..x.padded_width() {
                    if row >= 70 || col >= 70 {
                        p[row * x.padded_width() + col] = 0.0;
                    }
                }
            }
        }
        let y = ImagePlanes::from_padded_planes(70, 70, planes).unwrap();
        assert_eq!(mse(&x, &y).unwrap(), 0.0);
        assert_eq!(ms_ssim(&x, &y).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_dimensions() {
        assert!(mse(&random(64, 64, 1), &random(65, 64, 1)).is_err());
        assert!(ms_ssim(&random(64, 64, 1), &random(64, 63, 1)).is_err());
    }

    #[test]
    fn ms_ssim_is_symmetric_and_bounded() {
        let (x, y) = (random(200, 180, 5), random(200, 180, 6));
        let a = ms_ssim(&x, &y).unwrap();
        let b = ms_ssim(&y, &x).unwrap();
        assert!((a - b).abs() <= 1e-12);
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn ms_ssim_too_small() {
        let x = random(15, 100, 1);
        match ms_ssim(&x, &x) {
            Err(Error::ImageTooSmall { min, .. }) => assert_eq!(min, msssim::MIN_DIMENSION),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn loss_arithmetic() {
        let x = random(32, 32, 7);
        assert!((rdo_loss(&x, &x, 0.2, 0.5).unwrap() - 0.1).abs() < 1e-15);
        assert!((rdo_loss_from(0.05, 0.2, 0.25).unwrap() - 0.1).abs() < 1e-15);
        assert!(rdo_loss_from(0.05, 0.3, 0.25).unwrap() > rdo_loss_from(0.05, 0.2, 0.25).unwrap());
        assert!(rdo_loss_from(0.05, 0.2, 0.0).is_err());
        assert!(rdo_loss(&x, &x, 0.2, -1.0).is_err());
        assert!((training_loss(&x, &x, 1.0, 0.01).unwrap() - 0.01).abs() < 1e-15);
        assert!((training_loss_from(0.02, 0.1, 0.5, 0.01).unwrap() - 0.035).abs() < 1e-15);
        assert!(training_loss_from(0.02, 0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn lambda_presets_by_name() {
        for name in ["0.01", "0.02", "0.04", "0.08"] {
            assert_eq!(lambda_t_by_name(name), Some(name.parse().unwrap()));
        }
        assert_eq!(lambda_t_by_name("0.03"), None);
    }
}
