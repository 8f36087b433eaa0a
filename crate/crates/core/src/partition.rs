//! Granularity masks and the variance split criterion.
//!
//! A [`MaskField`] assigns a coding level to every 32×32 cell of the padded
//! image. Level 1 is the finest granularity, level 3 the coarsest. A cell may
//! only hold level 3 if its whole 64×64 parent block does, so each 64-block is
//! either coded as one unit or split into four 32-units of level 1 or 2.

use std::fmt;

use crate::bits::{BitReader, BitWriter};
use crate::error::{Error, Result};
use crate::image_io::{ImagePlanes, CHANNELS, GRID};
use crate::numeric;

/// Edge length of a mask cell.
pub const CELL: usize = GRID / 2;

pub const LEVEL_FINE: u8 = 1;
pub const LEVEL_MEDIUM: u8 = 2;
pub const LEVEL_COARSE: u8 = 3;

/// Levels of the four cells of one 64-block in Z-order:
/// top-left, top-right, bottom-left, bottom-right.
pub type BlockPattern = [u8; 4];

/// Z-order offsets `(dx, dy)` of the four sub-blocks, in cells.
pub const Z_ORDER: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskField {
    blocks_x: usize,
    blocks_y: usize,
    cells: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaskViolation {
    /// Cell value outside `{1, 2, 3}`.
    LevelOutOfRange { cell_x: usize, cell_y: usize, value: u8 },
    /// A 64-block mixes level 3 with other levels.
    Quadtree { block_x: usize, block_y: usize },
}

impl fmt::Display for MaskViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskViolation::LevelOutOfRange { cell_x, cell_y, value } => {
                write!(f, "cell ({cell_x}, {cell_y}) has level {value}")
            }
            MaskViolation::Quadtree { block_x, block_y } => {
                write!(f, "block ({block_x}, {block_y}) mixes level 3 with finer levels")
            }
        }
    }
}

impl MaskField {
    pub fn uniform(blocks_x: usize, blocks_y: usize, level: u8) -> Self {
        MaskField {
            blocks_x,
            blocks_y,
            cells: vec![level; 4 * blocks_x * blocks_y],
        }
    }

    /// Mask sized for the padded grid of `img`.
    pub fn uniform_for(img: &ImagePlanes, level: u8) -> Self {
        Self::uniform(img.blocks_x(), img.blocks_y(), level)
    }

    /// Wraps a row-major `(2·blocks_y)×(2·blocks_x)` cell grid without validating levels.
    pub fn from_cells(blocks_x: usize, blocks_y: usize, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != 4 * blocks_x * blocks_y {
            return Err(Error::InvalidMask(format!(
                "{} cells for a {blocks_x}x{blocks_y} block grid",
                cells.len()
            )));
        }
        Ok(MaskField {
            blocks_x,
            blocks_y,
            cells,
        })
    }

    pub fn blocks_x(&self) -> usize {
        self.blocks_x
    }

    pub fn blocks_y(&self) -> usize {
        self.blocks_y
    }

    /// N₆₄, the number of 64-blocks.
    pub fn n_blocks(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    pub fn cells_x(&self) -> usize {
        2 * self.blocks_x
    }

    pub fn cells_y(&self) -> usize {
        2 * self.blocks_y
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn cell(&self, cell_x: usize, cell_y: usize) -> u8 {
        self.cells[cell_y * self.cells_x() + cell_x]
    }

    pub fn set_cell(&mut self, cell_x: usize, cell_y: usize, level: u8) {
        let cx = self.cells_x();
        self.cells[cell_y * cx + cell_x] = level;
    }

    /// Block coordinates of a raster block index.
    pub fn block_coords(&self, block: usize) -> (usize, usize) {
        (block % self.blocks_x, block / self.blocks_x)
    }

    pub fn block_pattern(&self, block: usize) -> BlockPattern {
        let (bx, by) = self.block_coords(block);
        Z_ORDER.map(|(dx, dy)| self.cell(2 * bx + dx, 2 * by + dy))
    }

    pub fn set_block_pattern(&mut self, block: usize, pattern: BlockPattern) {
        let (bx, by) = self.block_coords(block);
        for (&(dx, dy), &level) in Z_ORDER.iter().zip(&pattern) {
            self.set_cell(2 * bx + dx, 2 * by + dy, level);
        }
    }

    pub fn count_level(&self, level: u8) -> usize {
        self.cells.iter().filter(|&&c| c == level).count()
    }

    /// Lists every range and quadtree violation; empty means valid.
    pub fn violations(&self) -> Vec<MaskViolation> {
        let mut out = Vec::new();
        for cy in 0..self.cells_y() {
            for cx in 0..self.cells_x() {
                let value = self.cell(cx, cy);
                if !(LEVEL_FINE..=LEVEL_COARSE).contains(&value) {
                    out.push(MaskViolation::LevelOutOfRange {
                        cell_x: cx,
                        cell_y: cy,
                        value,
                    });
                }
            }
        }
        for block in 0..self.n_blocks() {
            let pattern = self.block_pattern(block);
            let coarse = pattern.iter().filter(|&&l| l == LEVEL_COARSE).count();
            if coarse != 0 && coarse != 4 {
                let (block_x, block_y) = self.block_coords(block);
                out.push(MaskViolation::Quadtree { block_x, block_y });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    /// Errors with the first violation, if any.
    pub fn ensure_valid(&self) -> Result<()> {
        match self.violations().first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidMask(v.to_string())),
        }
    }

    /// Side-information bits this mask costs: one per block plus four per split block.
    pub fn side_info_bits(&self) -> usize {
        (0..self.n_blocks())
            .map(|b| if self.block_pattern(b)[0] == LEVEL_COARSE { 1 } else { 5 })
            .sum()
    }

    /// Appends the mask to `w`: per block in raster order, `0` for an unsplit
    /// block, else `1` followed by four Z-order bits (`1` = level 1, `0` = level 2).
    pub fn write_bits(&self, w: &mut BitWriter) -> Result<()> {
        self.ensure_valid()?;
        for block in 0..self.n_blocks() {
            let pattern = self.block_pattern(block);
            if pattern[0] == LEVEL_COARSE {
                w.push(false);
            } else {
                w.push(true);
                for level in pattern {
                    w.push(level == LEVEL_FINE);
                }
            }
        }
        Ok(())
    }

    /// Reads a mask written by [`MaskField::write_bits`].
    pub fn read_bits(r: &mut BitReader<'_>, blocks_x: usize, blocks_y: usize) -> Result<Self> {
        let mut mask = MaskField::uniform(blocks_x, blocks_y, LEVEL_COARSE);
        let truncated = |r: &BitReader<'_>| Error::MaskTruncated {
            needed: r.position() + 1,
            available: r.total_bits(),
        };
        for block in 0..mask.n_blocks() {
            if r.read().ok_or_else(|| truncated(r))? {
                let mut pattern = [0u8; 4];
                for level in &mut pattern {
                    let fine = r.read().ok_or_else(|| truncated(r))?;
                    *level = if fine { LEVEL_FINE } else { LEVEL_MEDIUM };
                }
                mask.set_block_pattern(block, pattern);
            }
        }
        Ok(mask)
    }
}

/// Serialized mask bytes (zero-padded) and the exact bit count.
pub fn serialize_mask(mask: &MaskField) -> Result<(Vec<u8>, usize)> {
    let mut w = BitWriter::new();
    mask.write_bits(&mut w)?;
    let len = w.len();
    Ok((w.into_bytes(), len))
}

/// Strict inverse of [`serialize_mask`]: rejects short input and anything
/// beyond the zero padding of the final byte.
pub fn deserialize_mask(bytes: &[u8], blocks_x: usize, blocks_y: usize) -> Result<MaskField> {
    let mut r = BitReader::new(bytes);
    let mask = MaskField::read_bits(&mut r, blocks_x, blocks_y)?;
    let used = r.position();
    let excess_bytes = bytes.len() - used.div_ceil(8);
    if excess_bytes > 0 {
        return Err(Error::MaskTrailing(excess_bytes * 8 + (8 - used % 8) % 8));
    }
    let tail = (8 - used % 8) % 8;
    if tail > 0 {
        let last = bytes[bytes.len() - 1];
        if last & ((1u8 << tail) - 1) != 0 {
            return Err(Error::MaskTrailing(tail));
        }
    }
    Ok(mask)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceThresholds {
    /// Split threshold for a 64-block.
    pub th1: f64,
    /// Split threshold for a 32-sub-block.
    pub th2: f64,
}

impl Default for VarianceThresholds {
    fn default() -> Self {
        VarianceThresholds { th1: 5e-4, th2: 2e-3 }
    }
}

impl VarianceThresholds {
    pub fn new(th1: f64, th2: f64) -> Result<Self> {
        if !(th1 > 0.0 && th2 > 0.0 && th1.is_finite() && th2.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "variance thresholds must be positive, got ({th1}, {th2})"
            )));
        }
        Ok(VarianceThresholds { th1, th2 })
    }
}

/// Sum over the three channels of the population variance of a square block
/// in padded coordinates.
pub fn block_variance(img: &ImagePlanes, x0: usize, y0: usize, size: usize) -> Result<f64> {
    let (w, h) = (img.padded_width(), img.padded_height());
    if size == 0 || x0 + size > w || y0 + size > h {
        return Err(Error::BlockOutOfBounds {
            x: x0,
            y: y0,
            size,
            width: w,
            height: h,
        });
    }
    let n = (size * size) as f64;
    let mut total = 0.0;
    for c in 0..CHANNELS {
        let plane = img.plane(c);
        let samples: Vec<f64> = (y0..y0 + size)
            .flat_map(|y| &plane[y * w + x0..y * w + x0 + size])
            .copied()
            .collect();
        let mean = numeric::mean(&samples);
        let squares: Vec<f64> = samples.iter().map(|v| (v - mean) * (v - mean)).collect();
        total += numeric::pairwise_sum(&squares) / n;
    }
    Ok(total)
}

/// Variance-criterion mask: a 64-block whose summed variance does not exceed
/// `th1` stays whole (level 3); otherwise each 32-sub-block becomes level 2 if
/// its variance does not exceed `th2`, else level 1.
pub fn generate_mask(img: &ImagePlanes, th: &VarianceThresholds) -> MaskField {
    let mut mask = MaskField::uniform_for(img, LEVEL_COARSE);
    for block in 0..mask.n_blocks() {
        let (bx, by) = mask.block_coords(block);
        let (x0, y0) = (bx * GRID, by * GRID);
        let var = block_variance(img, x0, y0, GRID).expect("block inside padded grid");
        if var <= th.th1 {
            continue;
        }
        let pattern = Z_ORDER.map(|(dx, dy)| {
            let v = block_variance(img, x0 + dx * CELL, y0 + dy * CELL, CELL)
                .expect("sub-block inside padded grid");
            if v <= th.th2 {
                LEVEL_MEDIUM
            } else {
                LEVEL_FINE
            }
        });
        mask.set_block_pattern(block, pattern);
    }
    mask
}
