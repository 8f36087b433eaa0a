//! Byte-oriented range coder with a 32-bit window and carry propagation.
//!
//! The encoder keeps a 33-bit `low` so a carry out of the window can be
//! pushed back into bytes that were already settled; a run of `0xFF` bytes
//! is held back until it is known whether a carry ripples through it. The
//! last symbol of every table absorbs the truncation remainder of the range.
//!
//! The leading byte of the classic construction is always zero and is not
//! emitted. At the end, the encoder picks the value inside the final interval
//! with the most trailing zero bytes and drops those bytes; the decoder reads
//! zeros past the end of input, at most four of them.

use super::laplace::{FrequencyTable, PRECISION_BITS, TOTAL_FREQ};
use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;
const FLUSH_BYTES: usize = 4;

#[derive(Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    pending: u64,
    skip_first: bool,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            pending: 1,
            skip_first: true,
            out: Vec::new(),
        }
    }

    pub fn encode(&mut self, symbol: i32, table: &FrequencyTable) -> Result<()> {
        if !table.contains(symbol) {
            return Err(Error::SymbolOutOfRange {
                symbol,
                bound: table.bound(),
            });
        }
        let (start, freq, last) = table.interval(symbol);
        self.encode_interval(start, freq, last);
        Ok(())
    }

    fn encode_interval(&mut self, start: u32, freq: u32, last: bool) {
        let r = self.range >> PRECISION_BITS;
        self.low += u64::from(r) * u64::from(start);
        self.range = if last { self.range - r * start } else { r * freq };
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || self.low >> 32 != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.emit(byte.wrapping_add(carry));
                byte = 0xFF;
                self.pending -= 1;
                if self.pending == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.pending += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn emit(&mut self, byte: u8) {
        if self.skip_first {
            debug_assert_eq!(byte, 0);
            self.skip_first = false;
        } else {
            self.out.push(byte);
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        let end = self.low + u64::from(self.range);
        let value = (0..=FLUSH_BYTES)
            .map(|keep| {
                let mask = (1u64 << (32 - 8 * keep as u32)) - 1;
                (self.low + mask) & !mask
            })
            .find(|&v| v < end)
            .expect("low itself lies in the final interval");
        self.low = value;
        for _ in 0..=FLUSH_BYTES {
            self.shift_low();
        }
        for _ in 0..FLUSH_BYTES {
            if self.out.last() == Some(&0) {
                self.out.pop();
            } else {
                break;
            }
        }
        self.out
    }
}

#[derive(Debug)]
pub struct RangeDecoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    overrun: usize,
    code: u32,
    range: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<Self> {
        let mut dec = RangeDecoder {
            bytes,
            pos: 0,
            overrun: 0,
            code: 0,
            range: u32::MAX,
        };
        for _ in 0..4 {
            dec.code = (dec.code << 8) | u32::from(dec.next_byte()?);
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8> {
        match self.bytes.get(self.pos) {
            Some(&b) => {
                self.pos += 1;
                Ok(b)
            }
            None => {
                self.overrun += 1;
                if self.overrun > FLUSH_BYTES {
                    Err(Error::PayloadTruncated)
                } else {
                    Ok(0)
                }
            }
        }
    }

    pub fn decode(&mut self, table: &FrequencyTable) -> Result<i32> {
        let r = self.range >> PRECISION_BITS;
        let v = (self.code / r).min(TOTAL_FREQ - 1);
        let (symbol, start, freq, last) = table.lookup(v);
        self.code -= r * start;
        self.range = if last { self.range - r * start } else { r * freq };
        if self.code >= self.range {
            return Err(Error::CorruptStream("range decoder left its interval".into()));
        }
        while self.range < TOP {
            self.code = (self.code << 8) | u32::from(self.next_byte()?);
            self.range <<= 8;
        }
        Ok(symbol)
    }

    /// Confirms the whole input was consumed.
    pub fn finish(self) -> Result<()> {
        if self.pos < self.bytes.len() {
            return Err(Error::CorruptStream(format!(
                "{} unused payload bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}
