//! Block-partition image coding with rate-distortion optimized masks.
//!
//! A [`MaskField`] assigns each 32×32 cell one of three resolution levels.
//! [`SurrogateCodec`] codes an image under a given mask, and [`rdo`] searches
//! for the mask that minimizes `(1 − MS-SSIM) + λ_e · bpp`.

pub mod bits;
pub mod codec;
pub mod entropy;
pub mod error;
pub mod image_io;
pub mod metrics;
pub mod numeric;
pub mod partition;
pub mod rdo;
pub mod selftest;
pub mod synth;

pub use codec::{Bitstream, CodecBackend, CodecConfig, SurrogateCodec};
pub use error::{Error, Result};
pub use image_io::ImagePlanes;
pub use metrics::{QualityAxis, RdCurve, RdPoint};
pub use partition::{MaskField, VarianceThresholds};
pub use rdo::{InitMode, QualityPreset, RdoConfig, RdoResult};
