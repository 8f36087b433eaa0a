//! The `.rdok` container.
//!
//! All multi-byte integers are big-endian:
//!
//! | field         | size                       |
//! |---------------|----------------------------|
//! | magic `RDOK`  | 4                          |
//! | version = 1   | 1                          |
//! | width         | 4 (u32)                    |
//! | height        | 4 (u32)                    |
//! | quant step    | 4 (IEEE-754 binary32)      |
//! | band scales   | [`SCALE_TABLE_LEN`] codes  |
//! | mask          | zero-padded to a byte      |
//! | payload       | range-coder output         |

use crate::bits::{BitReader, BitWriter};
use crate::entropy::BandScaleTable;
use crate::error::{Error, Result};
use crate::image_io::pad_to_grid;
use crate::image_io::GRID;
use crate::partition::MaskField;

use super::dct::BANDS;

pub const MAGIC: &[u8; 4] = b"RDOK";
pub const VERSION: u8 = 1;
/// One scale code per frequency band, shared by all levels.
pub const SCALE_TABLE_LEN: usize = BANDS;
pub const HEADER_BYTES: usize = 4 + 1 + 4 + 4 + 4 + SCALE_TABLE_LEN;

#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    pub width: u32,
    pub height: u32,
    pub quant_step: f32,
    pub scales: BandScaleTable,
    pub mask: MaskField,
    pub payload: Vec<u8>,
}

impl Bitstream {
    /// Exact serialized length in bits.
    pub fn rate_bits(&self) -> u64 {
        let mask_bytes = self.mask.side_info_bits().div_ceil(8);
        8 * (HEADER_BYTES + mask_bytes + self.payload.len()) as u64
    }

    /// Bits per pixel of the original (uncropped) image.
    pub fn bits_per_pixel(&self) -> f64 {
        self.rate_bits() as f64 / (f64::from(self.width) * f64::from(self.height))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.scales.len() != SCALE_TABLE_LEN {
            return Err(Error::InvalidConfig(format!(
                "band-scale table has {} entries, expected {SCALE_TABLE_LEN}",
                self.scales.len()
            )));
        }
        let mut out = Vec::with_capacity(self.rate_bits() as usize / 8);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.extend_from_slice(&self.quant_step.to_be_bytes());
        out.extend_from_slice(self.scales.codes());
        let mut w = BitWriter::new();
        self.mask.write_bits(&mut w)?;
        out.extend_from_slice(&w.into_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |msg: &str| Error::CorruptStream(msg.to_string());
        if bytes.len() < HEADER_BYTES {
            return Err(corrupt("shorter than the header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        if bytes[4] != VERSION {
            return Err(Error::CorruptStream(format!("unsupported version {}", bytes[4])));
        }
        let be_u32 = |at: usize| u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap());
        let width = be_u32(5);
        let height = be_u32(9);
        let quant_step = f32::from_bits(be_u32(13));
        if width == 0 || height == 0 {
            return Err(corrupt("zero image dimension"));
        }
        if !(quant_step.is_finite() && quant_step > 0.0) {
            return Err(corrupt("quantization step must be positive"));
        }
        let scales = BandScaleTable::from_codes(bytes[17..HEADER_BYTES].to_vec());
        let blocks_x = pad_to_grid(width as usize) / GRID;
        let blocks_y = pad_to_grid(height as usize) / GRID;
        let rest = &bytes[HEADER_BYTES..];
        let mut r = BitReader::new(rest);
        let mask = MaskField::read_bits(&mut r, blocks_x, blocks_y)
            .map_err(|e| Error::CorruptStream(format!("mask: {e}")))?;
        let mask_bytes = r.position().div_ceil(8);
        let tail = mask_bytes * 8 - r.position();
        if tail > 0 && rest[mask_bytes - 1] & ((1u8 << tail) - 1) != 0 {
            return Err(corrupt("nonzero mask padding"));
        }
        mask.ensure_valid()
            .map_err(|e| Error::CorruptStream(e.to_string()))?;
        Ok(Bitstream {
            width,
            height,
            quant_step,
            scales,
            mask,
            payload: rest[mask_bytes..].to_vec(),
        })
    }
}
