//! Range coding of integer symbols under discretized Laplace models.

mod laplace;
mod range_coder;

pub use laplace::{
    laplace_bin_probability, BandScaleTable, FrequencyTable, LaplaceModel, ALPHABET_BOUND,
    PRECISION_BITS, SCALE_CODES, TOTAL_FREQ,
};
pub use range_coder::{RangeDecoder, RangeEncoder};

pub(crate) use laplace::TableCache;

use crate::error::{Error, Result};

fn check_models(count: usize, models: &[LaplaceModel]) -> Result<()> {
    if models.len() != count {
        return Err(Error::InvalidConfig(format!(
            "{count} symbols but {} models",
            models.len()
        )));
    }
    Ok(())
}

/// Range-codes `symbols[i]` under `models[i]` over `[-ALPHABET_BOUND, ALPHABET_BOUND]`.
pub fn encode_symbols(symbols: &[i32], models: &[LaplaceModel]) -> Result<Vec<u8>> {
    check_models(symbols.len(), models)?;
    let mut cache = TableCache::new(ALPHABET_BOUND);
    let mut enc = RangeEncoder::new();
    for (&s, m) in symbols.iter().zip(models) {
        enc.encode(s, cache.get(m))?;
    }
    Ok(enc.finish())
}

pub fn decode_symbols(bytes: &[u8], count: usize, models: &[LaplaceModel]) -> Result<Vec<i32>> {
    check_models(count, models)?;
    let mut cache = TableCache::new(ALPHABET_BOUND);
    let mut dec = RangeDecoder::new(bytes)?;
    let symbols = models
        .iter()
        .map(|m| dec.decode(cache.get(m)))
        .collect::<Result<Vec<_>>>()?;
    dec.finish()?;
    Ok(symbols)
}

/// `Σ -log2 p(s_i)` under the coder's quantized tables.
pub fn ideal_codelength(symbols: &[i32], models: &[LaplaceModel]) -> f64 {
    let mut cache = TableCache::new(ALPHABET_BOUND);
    symbols
        .iter()
        .zip(models)
        .map(|(&s, m)| cache.get(m).cost_bits(s))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplace_samples(n: usize, b: f64, seed: u64) -> Vec<i32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen::<f64>() - 0.5;
                let x = -b * u.signum() * (1.0 - 2.0 * u.abs()).ln();
                (x.round() as i32).clamp(-ALPHABET_BOUND, ALPHABET_BOUND)
            })
            .collect()
    }

    #[test]
    fn empty_sequence() {
        let bytes = encode_symbols(&[], &[]).unwrap();
        assert!(bytes.is_empty());
        assert_eq!(decode_symbols(&bytes, 0, &[]).unwrap(), Vec::<i32>::new());
    }

    #[test]
    fn rejects_out_of_alphabet_symbol() {
        let m = [LaplaceModel::centered(1.0)];
        assert!(matches!(
            encode_symbols(&[256], &m),
            Err(Error::SymbolOutOfRange { symbol: 256, bound: 255 })
        ));
    }

    #[test]
    fn near_optimal_on_laplace_source() {
        let symbols = laplace_samples(100_000, 2.0, 3);
        let models = vec![LaplaceModel::centered(2.0); symbols.len()];
        let bytes = encode_symbols(&symbols, &models).unwrap();
        let ideal = ideal_codelength(&symbols, &models);
        let coded = (bytes.len() * 8) as f64;
        assert!(coded <= ideal * 1.01 + 32.0, "coded {coded} ideal {ideal}");
        assert_eq!(decode_symbols(&bytes, symbols.len(), &models).unwrap(), symbols);
    }

    #[test]
    fn truncated_payload_is_detected() {
        let symbols = laplace_samples(5000, 4.0, 9);
        let models = vec![LaplaceModel::centered(4.0); symbols.len()];
        let bytes = encode_symbols(&symbols, &models).unwrap();
        let cut = &bytes[..bytes.len() - 64];
        assert!(decode_symbols(cut, symbols.len(), &models).is_err());
    }

    #[test]
    fn extreme_symbols_roundtrip() {
        let symbols = vec![255, -255, 0, 255, 255, -255, 1, -1];
        let models = vec![LaplaceModel::centered(0.004); symbols.len()];
        let bytes = encode_symbols(&symbols, &models).unwrap();
        assert_eq!(decode_symbols(&bytes, symbols.len(), &models).unwrap(), symbols);
    }

    proptest! {
        #[test]
        fn lossless_and_deterministic(
            cases in proptest::collection::vec(
                (-255i32..=255, -3.0f64..3.0, 0.01f64..50.0), 0..300)
        ) {
            let symbols: Vec<i32> = cases.iter().map(|c| c.0).collect();
            let models: Vec<LaplaceModel> =
                cases.iter().map(|c| LaplaceModel::new(c.1, c.2)).collect();
            let a = encode_symbols(&symbols, &models).unwrap();
            let b = encode_symbols(&symbols, &models).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(decode_symbols(&a, symbols.len(), &models).unwrap(), symbols);
        }
    }
}
