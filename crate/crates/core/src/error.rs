use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("image has zero width or height")]
    EmptyImage,

    #[error("block at ({x}, {y}) of size {size} exceeds {width}x{height} raster")]
    BlockOutOfBounds {
        x: usize,
        y: usize,
        size: usize,
        width: usize,
        height: usize,
    },

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("image {width}x{height} is too small for MS-SSIM (minimum {min}x{min})")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("mask bitstream truncated: needed {needed} bits, have {available}")]
    MaskTruncated { needed: usize, available: usize },

    #[error("mask bitstream has {0} trailing bits beyond byte padding")]
    MaskTrailing(usize),

    #[error("symbol {symbol} outside alphabet [-{bound}, {bound}]")]
    SymbolOutOfRange { symbol: i32, bound: i32 },

    #[error("entropy-coded payload truncated")]
    PayloadTruncated,

    #[error("corrupt bitstream: {0}")]
    CorruptStream(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid rate-distortion curve: {0}")]
    InvalidCurve(String),

    #[error("quality ranges do not overlap: [{0:.4}, {1:.4}] vs [{2:.4}, {3:.4}]")]
    NoOverlap(f64, f64, f64, f64),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
