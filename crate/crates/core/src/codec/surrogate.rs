//! Hierarchical block-transform codec driven by a [`MaskField`].
//!
//! Coding units are visited in raster order of 64-blocks; a split block
//! contributes its four 32-units in Z-order. Each unit is box-downsampled by
//! its level factor, its mean is predicted from the reconstructed means of the
//! left and top units, and the residual is coded as 8×8 DCT blocks with a
//! uniform quantizer and one Laplace model per frequency band, shared by all
//! levels. The decoder upsamples level 2 and 3 units bilinearly back to
//! native resolution.

use std::sync::{Arc, OnceLock};

use crate::entropy::{BandScaleTable, FrequencyTable, LaplaceModel, RangeDecoder, RangeEncoder, SCALE_CODES};
use crate::error::{Error, Result};
use crate::image_io::{ImagePlanes, CHANNELS, GRID};
use crate::numeric;
use crate::partition::{MaskField, CELL, LEVEL_COARSE, Z_ORDER};

use super::container::{Bitstream, SCALE_TABLE_LEN};
use super::dct::{self, COEFFS, ZIGZAG};
use super::resample::{bilinear_upsample, box_downsample};
use super::{bin_width, CodecBackend, CodecConfig};

/// DC prediction used when a unit has neither a left nor a top neighbor.
const DEFAULT_PREDICTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodingUnit {
    pub x0: usize,
    pub y0: usize,
    /// Edge length in pixels: 64 for level 3, else 32.
    pub size: usize,
    pub level: u8,
}

impl CodingUnit {
    pub fn factor(&self) -> usize {
        CodecConfig::level_factor(self.level)
    }

    /// Edge length of the downsampled raster.
    pub fn grid(&self) -> usize {
        self.size / self.factor()
    }

    /// Quantized coefficients per channel.
    pub fn coefficients_per_channel(&self) -> usize {
        self.grid() * self.grid()
    }
}

/// Units in coding order.
pub fn coding_units(mask: &MaskField) -> Vec<CodingUnit> {
    let mut units = Vec::new();
    for block in 0..mask.n_blocks() {
        let (bx, by) = mask.block_coords(block);
        let pattern = mask.block_pattern(block);
        if pattern[0] == LEVEL_COARSE {
            units.push(CodingUnit {
                x0: bx * GRID,
                y0: by * GRID,
                size: GRID,
                level: LEVEL_COARSE,
            });
        } else {
            for (&(dx, dy), &level) in Z_ORDER.iter().zip(&pattern) {
                units.push(CodingUnit {
                    x0: bx * GRID + dx * CELL,
                    y0: by * GRID + dy * CELL,
                    size: CELL,
                    level,
                });
            }
        }
    }
    units
}

/// Supplies quantized coefficients, block by block, in coding order.
trait BlockSource {
    /// Row-major quantized coefficients of the next 8×8 block. The encoder
    /// receives the residual; the decoder ignores it.
    fn next_block(&mut self, residual: &[f64; COEFFS]) -> Result<[i32; COEFFS]>;
}

/// Tracks reconstructed unit means for DC prediction.
struct Predictor {
    cells_x: usize,
    unit_of_cell: Vec<usize>,
    means: Vec<[f64; CHANNELS]>,
}

impl Predictor {
    fn new(mask: &MaskField, units: &[CodingUnit]) -> Self {
        let cells_x = mask.cells_x();
        let mut unit_of_cell = vec![usize::MAX; cells_x * mask.cells_y()];
        for (i, u) in units.iter().enumerate() {
            let n = u.size / CELL;
            for dy in 0..n {
                for dx in 0..n {
                    unit_of_cell[(u.y0 / CELL + dy) * cells_x + u.x0 / CELL + dx] = i;
                }
            }
        }
        Predictor {
            cells_x,
            unit_of_cell,
            means: vec![[0.0; CHANNELS]; units.len()],
        }
    }

    fn predict(&self, unit: &CodingUnit, c: usize) -> f64 {
        let (cx, cy) = (unit.x0 / CELL, unit.y0 / CELL);
        let at = |x: usize, y: usize| self.means[self.unit_of_cell[y * self.cells_x + x]][c];
        let left = (cx > 0).then(|| at(cx - 1, cy));
        let top = (cy > 0).then(|| at(cx, cy - 1));
        match (left, top) {
            (Some(l), Some(t)) => (l + t) / 2.0,
            (Some(v), None) | (None, Some(v)) => v,
            (None, None) => DEFAULT_PREDICTION,
        }
    }
}

/// Runs the unit loop shared by encoder and decoder, returning padded
/// reconstruction planes (unclamped).
fn reconstruct(
    img: Option<&ImagePlanes>,
    mask: &MaskField,
    step: f64,
    source: &mut impl BlockSource,
) -> Result<[Vec<f64>; CHANNELS]> {
    let units = coding_units(mask);
    let (pw, ph) = (mask.blocks_x() * GRID, mask.blocks_y() * GRID);
    let mut planes: [Vec<f64>; CHANNELS] = std::array::from_fn(|_| vec![0.0; pw * ph]);
    let mut predictor = Predictor::new(mask, &units);
    let mut residual = [0.0; COEFFS];
    let bin = bin_width(step);
    for (index, unit) in units.iter().enumerate() {
        let (grid, factor) = (unit.grid(), unit.factor());
        let blocks = grid / dct::N;
        for c in 0..CHANNELS {
            let source_raster =
                img.map(|im| box_downsample(im.plane(c), pw, unit.x0, unit.y0, unit.size, factor));
            let pred = predictor.predict(unit, c);
            let mut recon = vec![0.0; grid * grid];
            for by in 0..blocks {
                for bx in 0..blocks {
                    let origin = by * dct::N * grid + bx * dct::N;
                    if let Some(raster) = &source_raster {
                        for y in 0..dct::N {
                            for x in 0..dct::N {
                                residual[y * dct::N + x] = raster[origin + y * grid + x] - pred;
                            }
                        }
                    }
                    let q = source.next_block(&residual)?;
                    let dequant: [f64; COEFFS] = std::array::from_fn(|i| f64::from(q[i]) * bin);
                    let block = dct::inverse(&dequant);
                    for y in 0..dct::N {
                        for x in 0..dct::N {
                            recon[origin + y * grid + x] = pred + block[y * dct::N + x];
                        }
                    }
                }
            }
            predictor.means[index][c] = numeric::mean(&recon);
            let full = bilinear_upsample(&recon, grid, factor);
            for y in 0..unit.size {
                let row = (unit.y0 + y) * pw + unit.x0;
                planes[c][row..row + unit.size].copy_from_slice(&full[y * unit.size..(y + 1) * unit.size]);
            }
        }
    }
    Ok(planes)
}

struct Quantizer {
    bin: f64,
    bound: i32,
    symbols: Vec<i32>,
    slots: Vec<u8>,
    abs_sum: [f64; SCALE_TABLE_LEN],
    count: [usize; SCALE_TABLE_LEN],
}

impl Quantizer {
    fn new(step: f64, bound: i32) -> Self {
        Quantizer {
            bin: bin_width(step),
            bound,
            symbols: Vec::new(),
            slots: Vec::new(),
            abs_sum: [0.0; SCALE_TABLE_LEN],
            count: [0; SCALE_TABLE_LEN],
        }
    }

    /// Per-band scale estimates: mean absolute scaled coefficient.
    fn scale_table(&self) -> BandScaleTable {
        let scales: Vec<f64> = self
            .abs_sum
            .iter()
            .zip(&self.count)
            .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
            .collect();
        BandScaleTable::from_scales(&scales)
    }
}

impl BlockSource for Quantizer {
    fn next_block(&mut self, residual: &[f64; COEFFS]) -> Result<[i32; COEFFS]> {
        let coeffs = dct::forward(residual);
        let mut q = [0i32; COEFFS];
        for &i in &ZIGZAG {
            let scaled = coeffs[i] / self.bin;
            let symbol = (scaled.round() as i64).clamp(-i64::from(self.bound), i64::from(self.bound)) as i32;
            q[i] = symbol;
            let slot = dct::band_of(i);
            self.symbols.push(symbol);
            self.slots.push(slot as u8);
            self.abs_sum[slot] += scaled.abs();
            self.count[slot] += 1;
        }
        Ok(q)
    }
}

struct PayloadReader<'a> {
    decoder: RangeDecoder<'a>,
    tables: Vec<&'a FrequencyTable>,
}

impl BlockSource for PayloadReader<'_> {
    fn next_block(&mut self, _residual: &[f64; COEFFS]) -> Result<[i32; COEFFS]> {
        let mut q = [0i32; COEFFS];
        for &i in &ZIGZAG {
            q[i] = self.decoder.decode(self.tables[dct::band_of(i)])?;
        }
        Ok(q)
    }
}

/// Frequency tables per scale code, built on first use and shared by clones.
#[derive(Clone)]
struct TableCache {
    bound: i32,
    tables: Arc<[OnceLock<FrequencyTable>]>,
}

impl TableCache {
    fn new(bound: i32) -> Self {
        TableCache {
            bound,
            tables: (0..SCALE_CODES).map(|_| OnceLock::new()).collect(),
        }
    }

    fn get(&self, code: u8) -> &FrequencyTable {
        self.tables[code as usize].get_or_init(|| {
            FrequencyTable::from_model(&LaplaceModel::centered(BandScaleTable::scale_of(code)), self.bound)
        })
    }

    fn for_scales<'a>(&'a self, scales: &BandScaleTable) -> Vec<&'a FrequencyTable> {
        scales.codes().iter().map(|&c| self.get(c)).collect()
    }
}

/// Quantized symbols of one coding unit, channel-major, 8×8 blocks in raster
/// order, coefficients in zigzag order.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSymbols {
    pub unit: CodingUnit,
    pub symbols: Vec<i32>,
}

#[derive(Clone)]
pub struct SurrogateCodec {
    cfg: CodecConfig,
    tables: TableCache,
}

impl std::fmt::Debug for SurrogateCodec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurrogateCodec").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl SurrogateCodec {
    pub fn new(cfg: CodecConfig) -> Self {
        SurrogateCodec {
            cfg,
            tables: TableCache::new(cfg.alphabet_bound),
        }
    }

    pub fn config(&self) -> &CodecConfig {
        &self.cfg
    }

    fn check_inputs(&self, img: &ImagePlanes, mask: &MaskField) -> Result<()> {
        if mask.blocks_x() != img.blocks_x() || mask.blocks_y() != img.blocks_y() {
            return Err(Error::InvalidMask(format!(
                "mask covers {}x{} blocks, image needs {}x{}",
                mask.blocks_x(),
                mask.blocks_y(),
                img.blocks_x(),
                img.blocks_y()
            )));
        }
        mask.ensure_valid()
    }

    fn quantize(&self, img: &ImagePlanes, mask: &MaskField) -> Result<(Quantizer, [Vec<f64>; CHANNELS])> {
        self.check_inputs(img, mask)?;
        let mut quantizer = Quantizer::new(self.cfg.transmitted_step(), self.cfg.alphabet_bound);
        let planes = reconstruct(Some(img), mask, self.cfg.transmitted_step(), &mut quantizer)?;
        Ok((quantizer, planes))
    }

    /// The reconstruction the encoder tracks, without entropy coding. Any
    /// positive alphabet bound is accepted here.
    pub fn encoder_reconstruction(&self, img: &ImagePlanes, mask: &MaskField) -> Result<ImagePlanes> {
        let (_, planes) = self.quantize(img, mask)?;
        ImagePlanes::from_padded_planes(img.width(), img.height(), planes)
    }

    /// Per-unit quantized symbols, in coding order.
    pub fn unit_symbols(&self, img: &ImagePlanes, mask: &MaskField) -> Result<Vec<UnitSymbols>> {
        let (quantizer, _) = self.quantize(img, mask)?;
        let mut rest = quantizer.symbols.as_slice();
        Ok(coding_units(mask)
            .into_iter()
            .map(|unit| {
                let (head, tail) = rest.split_at(CHANNELS * unit.coefficients_per_channel());
                rest = tail;
                UnitSymbols {
                    unit,
                    symbols: head.to_vec(),
                }
            })
            .collect())
    }
}

impl CodecBackend for SurrogateCodec {
    fn encode_with_mask(&self, img: &ImagePlanes, mask: &MaskField) -> Result<Bitstream> {
        self.cfg.validate()?;
        let (quantizer, _) = self.quantize(img, mask)?;
        let scales = quantizer.scale_table();
        let tables = self.tables.for_scales(&scales);
        let mut enc = RangeEncoder::new();
        for (&s, &slot) in quantizer.symbols.iter().zip(&quantizer.slots) {
            enc.encode(s, tables[slot as usize])?;
        }
        Ok(Bitstream {
            width: img.width() as u32,
            height: img.height() as u32,
            quant_step: self.cfg.quant_step as f32,
            scales,
            mask: mask.clone(),
            payload: enc.finish(),
        })
    }

    fn decode(&self, bs: &Bitstream) -> Result<ImagePlanes> {
        self.cfg.validate()?;
        if bs.scales.len() != SCALE_TABLE_LEN {
            return Err(Error::CorruptStream("band-scale table length".into()));
        }
        let mut reader = PayloadReader {
            decoder: RangeDecoder::new(&bs.payload)?,
            tables: self.tables.for_scales(&bs.scales),
        };
        let planes = reconstruct(None, &bs.mask, f64::from(bs.quant_step), &mut reader)?;
        reader.decoder.finish()?;
        ImagePlanes::from_padded_planes(bs.width as usize, bs.height as usize, planes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{LEVEL_FINE, LEVEL_MEDIUM};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn codec(step: f64) -> SurrogateCodec {
        SurrogateCodec::new(CodecConfig::new(step).unwrap())
    }

    fn noise(w: usize, h: usize, seed: u64) -> ImagePlanes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImagePlanes::from_fn(w, h, |_, _, _| rng.gen()).unwrap()
    }

    fn textured(w: usize, h: usize) -> ImagePlanes {
        ImagePlanes::from_fn(w, h, |x, y, c| {
            let (x, y) = (x as f64, y as f64);
            0.5 + 0.3 * (x / 7.0 + c as f64).sin() * (y / 11.0).cos() + 0.1 * ((x * y) / 300.0).sin()
        })
        .unwrap()
    }

    #[test]
    fn unit_order_and_geometry() {
        let mut mask = MaskField::uniform(2, 1, LEVEL_COARSE);
        mask.set_block_pattern(1, [1, 2, 2, 1]);
        let units = coding_units(&mask);
        let summary: Vec<_> = units.iter().map(|u| (u.x0, u.y0, u.size, u.level, u.grid())).collect();
        assert_eq!(
            summary,
            vec![
                (0, 0, 64, 3, 16),
                (64, 0, 32, 1, 32),
                (96, 0, 32, 2, 16),
                (64, 32, 32, 2, 16),
                (96, 32, 32, 1, 32),
            ]
        );
    }

    #[test]
    fn flat_image_codes_all_zero_coefficients() {
        let img = ImagePlanes::from_fn(256, 128, |_, _, _| 0.5).unwrap();
        let mask = MaskField::uniform_for(&img, LEVEL_COARSE);
        let units = codec(0.04).unit_symbols(&img, &mask).unwrap();
        assert!(units.iter().all(|u| u.symbols.iter().all(|&s| s == 0)));
        let bs = codec(0.04).encode_with_mask(&img, &mask).unwrap();
        // 8 blocks × 768 zero symbols at ≈0.0113 bits each
        assert!(bs.payload.len() <= 16, "{}", bs.payload.len());
    }

    #[test]
    fn flat_image_error_within_one_bin() {
        for &level in &[LEVEL_FINE, LEVEL_MEDIUM, LEVEL_COARSE] {
            let img = ImagePlanes::from_fn(150, 100, |_, _, c| 0.2 + 0.25 * c as f64).unwrap();
            let mask = MaskField::uniform_for(&img, level);
            let c = codec(0.08);
            let out = c.decode(&c.encode_with_mask(&img, &mask).unwrap()).unwrap();
            for ch in 0..3 {
                for (a, b) in img.plane(ch).iter().zip(out.plane(ch)) {
                    assert!((a - b).abs() <= 0.08, "level {level}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn decode_matches_encoder_reconstruction() {
        let img = textured(200, 140);
        let mut mask = MaskField::uniform_for(&img, LEVEL_COARSE);
        mask.set_block_pattern(1, [1, 2, 1, 1]);
        mask.set_block_pattern(4, [2, 2, 2, 2]);
        let c = codec(0.03);
        let bs = c.encode_with_mask(&img, &mask).unwrap();
        let parsed = Bitstream::from_bytes(&bs.to_bytes().unwrap()).unwrap();
        assert_eq!(parsed, bs);
        assert_eq!(c.decode(&parsed).unwrap(), c.encoder_reconstruction(&img, &mask).unwrap());
        assert_eq!(bs.to_bytes().unwrap().len() as u64 * 8, c.rate_of(&bs));
    }

    #[test]
    fn encoding_is_deterministic() {
        let img = noise(128, 128, 5);
        let mask = MaskField::uniform_for(&img, LEVEL_MEDIUM);
        let c = codec(0.02);
        let a = c.encode_with_mask(&img, &mask).unwrap().to_bytes().unwrap();
        let b = c.encode_with_mask(&img, &mask).unwrap().to_bytes().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn finer_levels_cost_more_on_noise() {
        let img = noise(192, 128, 21);
        let c = codec(0.04);
        let rate = |level| {
            c.rate_of(&c.encode_with_mask(&img, &MaskField::uniform_for(&img, level)).unwrap())
        };
        let (r1, r2, r3) = (rate(LEVEL_FINE), rate(LEVEL_MEDIUM), rate(LEVEL_COARSE));
        assert!(r1 > r2 && r2 > r3, "{r1} {r2} {r3}");
    }

    #[test]
    fn transform_path_inverts_as_step_vanishes() {
        let img = textured(128, 64);
        let mut cfg = CodecConfig::new(1e-6).unwrap();
        cfg.alphabet_bound = i32::MAX;
        let c = SurrogateCodec::new(cfg);
        let out = c
            .encoder_reconstruction(&img, &MaskField::uniform_for(&img, LEVEL_FINE))
            .unwrap();
        let n = (3 * 128 * 64) as f64;
        let sq: f64 = (0..3)
            .map(|ch| img.plane(ch).iter().zip(out.plane(ch)).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .sum();
        assert!((sq / n).sqrt() <= 1e-6);
    }

    #[test]
    fn rejects_mismatched_or_invalid_masks() {
        let img = noise(128, 64, 1);
        let c = codec(0.04);
        assert!(c.encode_with_mask(&img, &MaskField::uniform(1, 1, 3)).is_err());
        let mut bad = MaskField::uniform_for(&img, 3);
        bad.set_cell(0, 0, 2);
        assert!(c.encode_with_mask(&img, &bad).is_err());
    }

    #[test]
    fn truncated_payload_fails_to_decode() {
        let img = noise(128, 128, 3);
        let c = codec(0.02);
        let mut bs = c.encode_with_mask(&img, &MaskField::uniform_for(&img, LEVEL_FINE)).unwrap();
        bs.payload.truncate(bs.payload.len() / 2);
        assert!(c.decode(&bs).is_err());
    }

    #[test]
    fn neighbor_prediction_couples_units() {
        let img = textured(192, 128);
        let c = codec(0.02);
        let base = MaskField::uniform_for(&img, LEVEL_COARSE);
        let mut flipped = base.clone();
        flipped.set_block_pattern(0, [2, 2, 2, 2]);
        let a = c.unit_symbols(&img, &base).unwrap();
        let b = c.unit_symbols(&img, &flipped).unwrap();
        // block 1 is the right neighbor of block 0 in both masks
        let right_a = a.iter().find(|u| u.unit.x0 == 64 && u.unit.y0 == 0).unwrap();
        let right_b = b.iter().find(|u| u.unit.x0 == 64 && u.unit.y0 == 0).unwrap();
        assert_ne!(right_a.symbols, right_b.symbols);
    }
}
