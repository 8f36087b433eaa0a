//! Planar RGB images in `[0, 1]`, padded to the 64-pixel coding grid.
//!
//! Binary PPM (P6, maxval 255) is the only interchange format. Samples are
//! mapped to `v / 255` on load; on save they are clamped and rounded
//! half-up, so a load/save roundtrip is lossless.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Edge length of the largest coding block; padded dimensions are multiples of it.
pub const GRID: usize = 64;

pub const CHANNELS: usize = 3;

/// Rounds `n` up to the next multiple of [`GRID`].
pub fn pad_to_grid(n: usize) -> usize {
    n.div_ceil(GRID) * GRID
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlanes {
    width: usize,
    height: usize,
    padded_width: usize,
    padded_height: usize,
    planes: [Vec<f64>; CHANNELS],
}

impl ImagePlanes {
    /// Builds an image from a sample function over the original region.
    ///
    /// Samples are clamped into `[0, 1]` (NaN becomes 0); the padding region is
    /// filled by edge replication.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let padded_width = pad_to_grid(width);
        let padded_height = pad_to_grid(height);
        let mut planes: [Vec<f64>; CHANNELS] =
            std::array::from_fn(|_| vec![0.0; padded_width * padded_height]);
        for (c, plane) in planes.iter_mut().enumerate() {
            for y in 0..height {
                for x in 0..width {
                    plane[y * padded_width + x] = clamp_unit(f(x, y, c));
                }
            }
        }
        let mut img = ImagePlanes {
            width,
            height,
            padded_width,
            padded_height,
            planes,
        };
        img.replicate_edges();
        Ok(img)
    }

    /// Builds an image from interleaved 8-bit RGB samples.
    pub fn from_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        if data.len() != width * height * CHANNELS {
            return Err(Error::UnsupportedFormat(format!(
                "expected {} RGB bytes, got {}",
                width * height * CHANNELS,
                data.len()
            )));
        }
        Self::from_fn(width, height, |x, y, c| {
            f64::from(data[(y * width + x) * CHANNELS + c]) / 255.0
        })
    }

    /// Wraps already padded planes, clamping every sample into `[0, 1]`.
    ///
    /// The padding content is kept as given (decoders produce it).
    pub fn from_padded_planes(
        width: usize,
        height: usize,
        mut planes: [Vec<f64>; CHANNELS],
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let padded_width = pad_to_grid(width);
        let padded_height = pad_to_grid(height);
        for plane in &mut planes {
            if plane.len() != padded_width * padded_height {
                return Err(Error::DimensionMismatch(
                    padded_width,
                    padded_height,
                    plane.len(),
                    1,
                ));
            }
            plane.iter_mut().for_each(|v| *v = clamp_unit(*v));
        }
        Ok(ImagePlanes {
            width,
            height,
            padded_width,
            padded_height,
            planes,
        })
    }

    fn replicate_edges(&mut self) {
        let (w, h, pw, ph) = (self.width, self.height, self.padded_width, self.padded_height);
        for plane in &mut self.planes {
            for y in 0..h {
                let edge = plane[y * pw + w - 1];
                plane[y * pw + w..(y + 1) * pw].fill(edge);
            }
            let (top, bottom) = plane.split_at_mut(h * pw);
            let last_row = &top[(h - 1) * pw..];
            for row in bottom.chunks_exact_mut(pw).take(ph - h) {
                row.copy_from_slice(last_row);
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn padded_width(&self) -> usize {
        self.padded_width
    }

    pub fn padded_height(&self) -> usize {
        self.padded_height
    }

    /// Number of 64-block columns.
    pub fn blocks_x(&self) -> usize {
        self.padded_width / GRID
    }

    /// Number of 64-block rows.
    pub fn blocks_y(&self) -> usize {
        self.padded_height / GRID
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        &self.planes[c]
    }

    pub fn planes(&self) -> &[Vec<f64>; CHANNELS] {
        &self.planes
    }

    /// Sample at padded coordinates.
    #[inline]
    pub fn sample(&self, c: usize, x: usize, y: usize) -> f64 {
        self.planes[c][y * self.padded_width + x]
    }

    /// Interleaved 8-bit RGB of the original (cropped) region.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.width * self.height * CHANNELS);
        for y in 0..self.height {
            for x in 0..self.width {
                for c in 0..CHANNELS {
                    out.push(quantize_u8(self.sample(c, x, y)));
                }
            }
        }
        out
    }

    /// Copy of the original region as a tightly packed plane per channel.
    pub fn cropped_planes(&self) -> [Vec<f64>; CHANNELS] {
        std::array::from_fn(|c| {
            let mut out = Vec::with_capacity(self.width * self.height);
            for y in 0..self.height {
                let row = y * self.padded_width;
                out.extend_from_slice(&self.planes[c][row..row + self.width]);
            }
            out
        })
    }
}

#[inline]
fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Clamp to `[0, 1]`, then round half-up to `0..=255`.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    (clamp_unit(v) * 255.0 + 0.5).floor() as u8
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImagePlanes> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes)
}

pub fn save_image(img: &ImagePlanes, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
}

/// Serializes the cropped region as binary PPM.
pub fn encode_ppm(img: &ImagePlanes) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(&img.to_rgb8());
    out
}

pub fn decode_ppm(bytes: &[u8]) -> Result<ImagePlanes> {
    let mut cursor = PnmHeader { bytes, pos: 0 };
    if cursor.bytes.get(..2) != Some(b"P6") {
        return Err(Error::UnsupportedFormat("missing P6 magic".into()));
    }
    cursor.pos = 2;
    let width = cursor.next_uint()?;
    let height = cursor.next_uint()?;
    let maxval = cursor.next_uint()?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval} (only 255 supported)")));
    }
    // exactly one whitespace byte separates the header from the raster
    match cursor.bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(Error::UnsupportedFormat("malformed PPM header".into())),
    }
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(CHANNELS))
        .ok_or_else(|| Error::UnsupportedFormat("image dimensions overflow".into()))?;
    let data = cursor
        .bytes
        .get(cursor.pos..cursor.pos + len)
        .ok_or_else(|| Error::UnsupportedFormat("PPM raster truncated".into()))?;
    ImagePlanes::from_rgb8(width, height, data)
}

struct PnmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PnmHeader<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_uint(&mut self) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsupportedFormat("malformed PPM header".into()))
    }
}
