//! Discretized Laplace models and their 16-bit frequency tables.

use std::collections::HashMap;

/// Cumulative frequencies sum to `1 << PRECISION_BITS`.
pub const PRECISION_BITS: u32 = 16;
pub const TOTAL_FREQ: u32 = 1 << PRECISION_BITS;

/// Symbols are integers in `[-ALPHABET_BOUND, ALPHABET_BOUND]`.
pub const ALPHABET_BOUND: i32 = 255;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceModel {
    pub mu: f64,
    /// Scale, strictly positive.
    pub b: f64,
}

impl LaplaceModel {
    pub fn new(mu: f64, b: f64) -> Self {
        assert!(b > 0.0 && b.is_finite(), "Laplace scale must be positive, got {b}");
        LaplaceModel { mu, b }
    }

    /// Zero-mean model.
    pub fn centered(b: f64) -> Self {
        Self::new(0.0, b)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.b;
        if z < 0.0 {
            0.5 * z.exp()
        } else {
            1.0 - 0.5 * (-z).exp()
        }
    }

    /// Exact mass of the unit bin centered on `k`, without flooring.
    pub fn bin_mass(&self, k: i32) -> f64 {
        let k = f64::from(k);
        let (lo, hi) = ((k - 0.5 - self.mu) / self.b, (k + 0.5 - self.mu) / self.b);
        // evaluate on the side of the mode where the difference is well conditioned
        if lo >= 0.0 {
            0.5 * ((-lo).exp() - (-hi).exp())
        } else if hi <= 0.0 {
            0.5 * (hi.exp() - lo.exp())
        } else {
            1.0 - 0.5 * (lo.exp() + (-hi).exp())
        }
    }
}

impl LaplaceModel {
    /// `bin_mass(k)` for every `k` in `[-bound, bound]`, bit-identical to the
    /// per-bin form but with one exponential per bin edge.
    pub fn bin_masses(&self, bound: i32) -> Vec<f64> {
        // tail factor at each edge, on the side of the mode the edge lies on
        let edges: Vec<(f64, f64)> = (-bound..=bound + 1)
            .map(|k| {
                let e = (f64::from(k) - 0.5 - self.mu) / self.b;
                (e, if e >= 0.0 { (-e).exp() } else { e.exp() })
            })
            .collect();
        edges
            .windows(2)
            .map(|w| {
                let ((lo, t_lo), (hi, t_hi)) = (w[0], w[1]);
                if lo >= 0.0 {
                    0.5 * (t_lo - t_hi)
                } else if hi <= 0.0 {
                    0.5 * (t_hi - t_lo)
                } else {
                    1.0 - 0.5 * (t_lo + t_hi)
                }
            })
            .collect()
    }
}

/// Quantized cumulative distribution over `[-bound, bound]`.
///
/// Each symbol gets at least one quantum; the rest of the mass is assigned
/// proportionally to the normalized bin masses with largest-remainder rounding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    bound: i32,
    cum: Vec<u32>,
    /// Index of the most frequent symbol, tried before searching.
    mode: usize,
}

impl FrequencyTable {
    pub fn from_model(model: &LaplaceModel, bound: i32) -> Self {
        assert!(bound >= 0, "alphabet bound must be non-negative");
        let n = (2 * bound + 1) as usize;
        assert!(n as u32 <= TOTAL_FREQ, "alphabet larger than frequency precision");
        let masses = model.bin_masses(bound);
        let sum: f64 = masses.iter().sum();
        let spare = f64::from(TOTAL_FREQ - n as u32);
        let mut freqs = Vec::with_capacity(n);
        let mut remainders = Vec::with_capacity(n);
        for (i, &m) in masses.iter().enumerate() {
            let share = if sum > 0.0 { m / sum * spare } else { spare / n as f64 };
            let whole = share.floor();
            freqs.push(1 + whole as u32);
            remainders.push((share - whole, i));
        }
        let assigned: u32 = freqs.iter().sum();
        let leftover = (TOTAL_FREQ - assigned) as usize;
        // ties go to the lower index so table construction is deterministic;
        // only the set of the `leftover` largest remainders matters
        if leftover > 0 {
            let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            if leftover < n {
                remainders.select_nth_unstable_by(leftover - 1, order);
            }
            for &(_, i) in &remainders[..leftover] {
                freqs[i] += 1;
            }
        }
        let mode = (0..n).fold(0, |m, i| if freqs[i] > freqs[m] { i } else { m });
        let mut cum = Vec::with_capacity(n + 1);
        let mut acc = 0;
        cum.push(0);
        for f in freqs {
            acc += f;
            cum.push(acc);
        }
        debug_assert_eq!(acc, TOTAL_FREQ);
        FrequencyTable { bound, cum, mode }
    }

    pub fn bound(&self) -> i32 {
        self.bound
    }

    pub fn contains(&self, symbol: i32) -> bool {
        (-self.bound..=self.bound).contains(&symbol)
    }

    fn index(&self, symbol: i32) -> usize {
        (symbol + self.bound) as usize
    }

    /// `(start, freq, is_last)` of a symbol within the alphabet.
    #[inline]
    pub(crate) fn interval(&self, symbol: i32) -> (u32, u32, bool) {
        let i = self.index(symbol);
        (self.cum[i], self.cum[i + 1] - self.cum[i], i + 2 == self.cum.len())
    }

    /// Symbol whose interval contains cumulative value `v < TOTAL_FREQ`.
    #[inline]
    pub(crate) fn lookup(&self, v: u32) -> (i32, u32, u32, bool) {
        let m = self.mode;
        let i = if self.cum[m] <= v && v < self.cum[m + 1] {
            m
        } else {
            self.cum.partition_point(|&c| c <= v) - 1
        };
        let last = i + 2 == self.cum.len();
        (i as i32 - self.bound, self.cum[i], self.cum[i + 1] - self.cum[i], last)
    }

    /// Probability the coder assigns to `symbol` (0 outside the alphabet).
    pub fn probability(&self, symbol: i32) -> f64 {
        if !self.contains(symbol) {
            return 0.0;
        }
        let (_, freq, _) = self.interval(symbol);
        f64::from(freq) / f64::from(TOTAL_FREQ)
    }

    /// Ideal code length of `symbol` in bits under this table.
    pub fn cost_bits(&self, symbol: i32) -> f64 {
        -self.probability(symbol).log2()
    }
}

/// Probability the range coder uses for symbol `k`: the Laplace bin mass
/// `F(k + 1/2) - F(k - 1/2)`, floored at one quantum and renormalized over
/// `[-ALPHABET_BOUND, ALPHABET_BOUND]`.
pub fn laplace_bin_probability(model: &LaplaceModel, k: i32) -> f64 {
    FrequencyTable::from_model(model, ALPHABET_BOUND).probability(k)
}

/// Memoizes frequency tables per distinct model.
#[derive(Debug, Default)]
pub(crate) struct TableCache {
    bound: i32,
    tables: HashMap<(u64, u64), FrequencyTable>,
}

impl TableCache {
    pub(crate) fn new(bound: i32) -> Self {
        TableCache {
            bound,
            tables: HashMap::new(),
        }
    }

    pub(crate) fn get(&mut self, model: &LaplaceModel) -> &FrequencyTable {
        let bound = self.bound;
        self.tables
            .entry((model.mu.to_bits(), model.b.to_bits()))
            .or_insert_with(|| FrequencyTable::from_model(model, bound))
    }
}

/// Number of distinct 8-bit log-scale codes.
pub const SCALE_CODES: usize = 256;
const SCALE_STEPS_PER_OCTAVE: f64 = 16.0;
const SCALE_MIN_LOG2: f64 = -8.0;

/// Per-band Laplace scales, each transmitted as an 8-bit logarithmic code:
/// `b = 2^(code / 16 - 8)`, covering roughly `0.0039 ..= 245`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandScaleTable {
    codes: Vec<u8>,
}

impl BandScaleTable {
    pub fn from_codes(codes: Vec<u8>) -> Self {
        BandScaleTable { codes }
    }

    /// Quantizes estimated scales; non-positive estimates map to the smallest code.
    pub fn from_scales(scales: &[f64]) -> Self {
        BandScaleTable {
            codes: scales.iter().map(|&b| Self::code_for(b)).collect(),
        }
    }

    pub fn code_for(b: f64) -> u8 {
        if !(b > 0.0) {
            return 0;
        }
        let code = (SCALE_STEPS_PER_OCTAVE * (b.log2() - SCALE_MIN_LOG2)).round();
        code.clamp(0.0, (SCALE_CODES - 1) as f64) as u8
    }

    pub fn scale_of(code: u8) -> f64 {
        (f64::from(code) / SCALE_STEPS_PER_OCTAVE + SCALE_MIN_LOG2).exp2()
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn scale(&self, band: usize) -> f64 {
        Self::scale_of(self.codes[band])
    }
}
