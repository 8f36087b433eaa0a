//! Embedded invariant checks, runnable from the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{dct, CodecBackend, CodecConfig, SurrogateCodec};
use crate::entropy::{decode_symbols, encode_symbols, BandScaleTable, LaplaceModel, ALPHABET_BOUND};
use crate::error::{Error, Result};
use crate::image_io::ImagePlanes;
use crate::partition::{deserialize_mask, serialize_mask, MaskField, LEVEL_COARSE};
use crate::rdo::{optimize, InitMode, QualityPreset, RdoConfig};
use crate::synth;

/// Deliberate faults for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Perturb the band-scale table between encoding and decoding.
    CorruptScaleTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub detail: String,
}

pub const CHECKS: [&str; 4] = ["entropy", "mask", "dct", "flat-optimality"];

const SEED: u64 = 0x5E1F_7E57;

fn fail(name: &str, detail: impl Into<String>) -> Error {
    Error::Invariant(format!("{name} check failed: {}", detail.into()))
}

fn check_entropy(fault: Fault) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut total = 0;
    for _ in 0..200 {
        let n = rng.gen_range(0..200);
        let models: Vec<LaplaceModel> = (0..n)
            .map(|_| LaplaceModel::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..40.0)))
            .collect();
        let symbols: Vec<i32> = (0..n).map(|_| rng.gen_range(-ALPHABET_BOUND..=ALPHABET_BOUND)).collect();
        let bytes = encode_symbols(&symbols, &models)?;
        let back = decode_symbols(&bytes, n, &models).map_err(|e| fail("entropy", e.to_string()))?;
        if back != symbols {
            return Err(fail("entropy", "symbol roundtrip mismatch"));
        }
        total += n;
    }

    let img = synth::texture(128, 128, SEED);
    let codec = SurrogateCodec::new(CodecConfig::new(0.02)?);
    let mut mask = MaskField::uniform_for(&img, LEVEL_COARSE);
    mask.set_block_pattern(1, [1, 2, 2, 1]);
    let mut bs = codec.encode_with_mask(&img, &mask)?;
    if fault == Fault::CorruptScaleTable {
        let codes: Vec<u8> = bs.scales.codes().iter().map(|c| c.wrapping_add(37)).collect();
        bs.scales = BandScaleTable::from_codes(codes);
    }
    let expected = codec.encoder_reconstruction(&img, &mask)?;
    let decoded = codec
        .decode(&bs)
        .map_err(|e| fail("entropy", format!("codec stream does not decode: {e}")))?;
    if decoded != expected {
        return Err(fail("entropy", "codec stream decodes to a different image"));
    }
    Ok(format!("{total} symbols and one codec stream roundtrip"))
}

fn check_mask() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let count = 500;
    for _ in 0..count {
        let (bx, by) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let mut m = MaskField::uniform(bx, by, LEVEL_COARSE);
        for b in 0..m.n_blocks() {
            if rng.gen_bool(0.5) {
                m.set_block_pattern(b, std::array::from_fn(|_| rng.gen_range(1..=2)));
            }
        }
        let (bytes, _) = serialize_mask(&m)?;
        let back = deserialize_mask(&bytes, bx, by).map_err(|e| fail("mask", e.to_string()))?;
        if back != m {
            return Err(fail("mask", "mask roundtrip mismatch"));
        }
    }
    Ok(format!("{count} random masks roundtrip"))
}

fn check_dct() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let block: [f64; dct::COEFFS] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let back = dct::inverse(&dct::forward(&block));
        for (a, b) in block.iter().zip(&back) {
            worst = worst.max((a - b).abs());
        }
    }
    if worst > 1e-12 {
        return Err(fail("dct", format!("inverse error {worst:e}")));
    }
    Ok(format!("max inverse error {worst:.1e}"))
}

fn check_flat_optimality() -> Result<String> {
    let img: ImagePlanes = synth::flat(128, 64, 0.3);
    let coarse = MaskField::uniform_for(&img, LEVEL_COARSE);
    let mut runs = 0;
    for (init, passes) in [
        (InitMode::VarianceAdaptive, 0),
        (InitMode::VarianceAdaptive, 1),
        (InitMode::Static, 2),
    ] {
        let r = optimize(&img, &RdoConfig::new(QualityPreset::Q2, init, passes)?)?;
        if r.mask != coarse {
            return Err(fail(
                "flat-optimality",
                format!("{init} init with {passes} passes kept a split block"),
            ));
        }
        runs += r.total_evaluations();
    }
    Ok(format!("uniform coarse mask chosen in every mode ({runs} codec runs)"))
}

/// Runs every check in order and stops at the first failure, which is
/// reported as [`Error::Invariant`] naming the check.
pub fn run(fault: Fault) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for name in CHECKS {
        let detail = match name {
            "entropy" => check_entropy(fault)?,
            "mask" => check_mask()?,
            "dct" => check_dct()?,
            _ => check_flat_optimality()?,
        };
        out.push(CheckOutcome { name, detail });
    }
    Ok(out)
}
