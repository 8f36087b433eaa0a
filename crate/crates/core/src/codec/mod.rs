//! Mask-driven surrogate codec and its container format.

pub mod container;
pub mod dct;
pub mod resample;
pub mod surrogate;

pub use container::{Bitstream, HEADER_BYTES, SCALE_TABLE_LEN};
pub use surrogate::{coding_units, CodingUnit, SurrogateCodec, UnitSymbols};

use crate::entropy::ALPHABET_BOUND;
use crate::error::{Error, Result};
use crate::image_io::ImagePlanes;
use crate::partition::MaskField;

/// Number of partition levels.
pub const LEVELS: usize = 3;

/// Downsampling factor per level, indexed by `level - 1`.
pub const LEVEL_FACTORS: [usize; LEVELS] = [1, 2, 4];

/// Coefficients are quantized in the orthonormal DCT domain scaled by 1/√8.
///
/// Residuals have unit range, so AC coefficients stay within ±√2 and the DC
/// term within ±2√2·|mean residual|. At the finest preset step this keeps
/// natural content inside the ±255 alphabet, while the RMS pixel error of a
/// tiny step stays below the step itself.
pub const COEFF_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2 / 2.0;

/// Width of one quantization bin in the orthonormal domain.
pub fn bin_width(quant_step: f64) -> f64 {
    quant_step / COEFF_SCALE
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecConfig {
    pub quant_step: f64,
    /// Quantized coefficients are clamped to `±alphabet_bound`.
    pub alphabet_bound: i32,
}

impl CodecConfig {
    pub fn new(quant_step: f64) -> Result<Self> {
        let cfg = CodecConfig {
            quant_step,
            alphabet_bound: ALPHABET_BOUND,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let step = self.transmitted_step();
        if !(self.quant_step.is_finite() && step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "quantization step must be positive and representable, got {}",
                self.quant_step
            )));
        }
        if !(1..=ALPHABET_BOUND).contains(&self.alphabet_bound) {
            return Err(Error::InvalidConfig(format!(
                "alphabet bound must be in 1..={ALPHABET_BOUND}, got {}",
                self.alphabet_bound
            )));
        }
        Ok(())
    }

    /// The step as stored in the container, which both sides quantize with.
    pub fn transmitted_step(&self) -> f64 {
        f64::from(self.quant_step as f32)
    }

    /// Panics on a level outside 1..=3.
    pub fn level_factor(level: u8) -> usize {
        LEVEL_FACTORS[level as usize - 1]
    }
}

/// A codec whose rate and reconstruction depend on a partition mask.
pub trait CodecBackend: Send + Sync {
    fn encode_with_mask(&self, img: &ImagePlanes, mask: &MaskField) -> Result<Bitstream>;

    fn decode(&self, bs: &Bitstream) -> Result<ImagePlanes>;

    /// Total stream length in bits, side information included.
    fn rate_of(&self, bs: &Bitstream) -> u64 {
        bs.rate_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(CodecConfig::new(0.04).is_ok());
        assert!(CodecConfig::new(0.0).is_err());
        assert!(CodecConfig::new(-1.0).is_err());
        assert!(CodecConfig::new(f64::NAN).is_err());
        assert!(CodecConfig::new(1e-50).is_err());
        let mut cfg = CodecConfig::new(0.04).unwrap();
        cfg.alphabet_bound = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn transmitted_step_is_binary32() {
        let cfg = CodecConfig::new(0.1).unwrap();
        assert_eq!(cfg.transmitted_step(), f64::from(0.1f32));
        assert_ne!(cfg.transmitted_step(), 0.1);
    }
}
