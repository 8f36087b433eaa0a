//! Block-wise greedy rate-distortion optimization of the partition mask.
//!
//! Starting from an initial mask, each pass visits the 64-blocks in raster
//! order and re-encodes the whole image for a small set of candidate
//! assignments of the current block, keeping the one with the lowest
//! `L = (1 − MS-SSIM) + λ_e·bpp`. Later blocks see the decisions of earlier
//! ones through DC prediction, so the sweep is inherently sequential.

use std::cmp::{Ordering, Reverse};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{Bitstream, CodecBackend, CodecConfig, SurrogateCodec};
use crate::error::{Error, Result};
use crate::image_io::ImagePlanes;
use crate::metrics::{self, RdCurve, RdPoint, LAMBDA_E_PRESETS, LAMBDA_T_PRESETS};
use crate::partition::{
    generate_mask, BlockPattern, MaskField, VarianceThresholds, LEVEL_COARSE, LEVEL_FINE, LEVEL_MEDIUM,
};

/// Quantizer step per preset, lowest rate first.
pub const PRESET_QUANT_STEPS: [f64; 4] = [0.08, 0.04, 0.02, 0.01];

pub const MAX_PASSES: u8 = 2;

/// Upper bound on codec runs per block and pass.
pub const MAX_CANDIDATES: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QualityPreset {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl QualityPreset {
    pub const ALL: [QualityPreset; 4] = [Self::Q1, Self::Q2, Self::Q3, Self::Q4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn quant_step(self) -> f64 {
        PRESET_QUANT_STEPS[self.index()]
    }

    pub fn lambda_e(self) -> f64 {
        LAMBDA_E_PRESETS[self.index()]
    }

    /// The training λ this preset stands in for.
    pub fn lambda_t(self) -> f64 {
        LAMBDA_T_PRESETS[self.index()]
    }

    pub fn preset(self) -> Preset {
        Preset {
            label: self.to_string(),
            quant_step: self.quant_step(),
            lambda_e: self.lambda_e(),
        }
    }
}

impl fmt::Display for QualityPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.index() + 1)
    }
}

impl FromStr for QualityPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Q1" => Ok(Self::Q1),
            "Q2" => Ok(Self::Q2),
            "Q3" => Ok(Self::Q3),
            "Q4" => Ok(Self::Q4),
            other => Err(Error::InvalidConfig(format!("unknown quality preset '{other}'"))),
        }
    }
}

/// A named (quantizer step, λ_e) operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub label: String,
    pub quant_step: f64,
    pub lambda_e: f64,
}

pub fn default_presets() -> Vec<Preset> {
    QualityPreset::ALL.iter().map(|p| p.preset()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitMode {
    /// Every block starts at the coarsest level.
    Static,
    /// Start from the variance-criterion mask.
    VarianceAdaptive,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Static => "static",
            InitMode::VarianceAdaptive => "var",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "static" => Ok(InitMode::Static),
            "var" | "variance" => Ok(InitMode::VarianceAdaptive),
            other => Err(Error::InvalidConfig(format!("unknown init mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdoConfig {
    pub init_mode: InitMode,
    /// 0 (very fast), 1 (fast) or 2 (full).
    pub passes: u8,
    pub quant_step: f64,
    pub lambda_e: f64,
    pub thresholds: VarianceThresholds,
}

impl RdoConfig {
    pub fn new(preset: QualityPreset, init_mode: InitMode, passes: u8) -> Result<Self> {
        let cfg = RdoConfig {
            init_mode,
            passes,
            quant_step: preset.quant_step(),
            lambda_e: preset.lambda_e(),
            thresholds: VarianceThresholds::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_preset(&self, preset: &Preset) -> Self {
        RdoConfig {
            quant_step: preset.quant_step,
            lambda_e: preset.lambda_e,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.passes > MAX_PASSES {
            return Err(Error::InvalidConfig(format!(
                "passes must be 0, 1 or 2, got {}",
                self.passes
            )));
        }
        if self.passes == 0 && self.init_mode == InitMode::Static {
            return Err(Error::InvalidConfig(
                "zero passes uses the variance mask directly and requires variance init".into(),
            ));
        }
        if !(self.lambda_e.is_finite() && self.lambda_e > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda_e must be positive, got {}",
                self.lambda_e
            )));
        }
        VarianceThresholds::new(self.thresholds.th1, self.thresholds.th2)?;
        CodecConfig::new(self.quant_step).map(|_| ())
    }

    pub fn codec(&self) -> Result<SurrogateCodec> {
        Ok(SurrogateCodec::new(CodecConfig::new(self.quant_step)?))
    }
}

pub fn initialize_mask(img: &ImagePlanes, cfg: &RdoConfig) -> MaskField {
    match cfg.init_mode {
        InitMode::Static => MaskField::uniform_for(img, LEVEL_COARSE),
        InitMode::VarianceAdaptive => generate_mask(img, &cfg.thresholds),
    }
}

/// The uniform assignments, coarsest first.
pub const UNIFORM_CANDIDATES: [BlockPattern; 3] = [
    [LEVEL_COARSE; 4],
    [LEVEL_MEDIUM; 4],
    [LEVEL_FINE; 4],
];

/// The four single-cell 1↔2 toggles of a level-1/2 pattern, in Z-order.
pub fn toggle_candidates(base: BlockPattern) -> [BlockPattern; 4] {
    std::array::from_fn(|i| {
        let mut p = base;
        p[i] = if p[i] == LEVEL_FINE { LEVEL_MEDIUM } else { LEVEL_FINE };
        p
    })
}

/// Candidate assignments for one block in evaluation order: the three uniform
/// patterns, then the toggles of uniform-2 if `medium_beats_fine`, else of
/// uniform-1. The comparison needs the uniform losses, so the optimizer
/// evaluates those first.
pub fn candidates_for_block(medium_beats_fine: bool) -> Vec<BlockPattern> {
    let base = if medium_beats_fine { [LEVEL_MEDIUM; 4] } else { [LEVEL_FINE; 4] };
    let mut out = UNIFORM_CANDIDATES.to_vec();
    out.extend(toggle_candidates(base));
    out
}

fn level_sum(p: &BlockPattern) -> u32 {
    p.iter().map(|&l| u32::from(l)).sum()
}

/// One full encode, decode and loss computation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    pub rate_bpp: f64,
    pub ms_ssim: f64,
    pub psnr_db: f64,
    pub bitstream: Bitstream,
}

impl Evaluation {
    pub fn distortion(&self) -> f64 {
        1.0 - self.ms_ssim
    }
}

pub fn evaluate(
    codec: &dyn CodecBackend,
    img: &ImagePlanes,
    mask: &MaskField,
    lambda_e: f64,
) -> Result<Evaluation> {
    let bitstream = codec.encode_with_mask(img, mask)?;
    let decoded = codec.decode(&bitstream)?;
    let ms_ssim = metrics::ms_ssim(img, &decoded)?;
    let psnr_db = metrics::psnr(img, &decoded)?;
    let rate_bpp = codec.rate_of(&bitstream) as f64 / (img.width() * img.height()) as f64;
    Ok(Evaluation {
        loss: metrics::rdo_loss_from(1.0 - ms_ssim, rate_bpp, lambda_e)?,
        rate_bpp,
        ms_ssim,
        psnr_db,
        bitstream,
    })
}

#[derive(Debug, Clone)]
pub struct RdoResult {
    pub mask: MaskField,
    pub bitstream: Bitstream,
    pub loss: f64,
    pub rate_bpp: f64,
    pub ms_ssim: f64,
    pub psnr_db: f64,
    /// Codec runs spent searching, excluding the evaluation of the initial mask.
    pub codec_runs: u64,
    /// Loss after initialization and after each pass.
    pub per_pass_losses: Vec<f64>,
}

impl RdoResult {
    pub fn distortion(&self) -> f64 {
        1.0 - self.ms_ssim
    }

    /// Every codec run, the initial evaluation included.
    pub fn total_evaluations(&self) -> u64 {
        self.codec_runs + 1
    }
}

pub fn optimize(img: &ImagePlanes, cfg: &RdoConfig) -> Result<RdoResult> {
    cfg.validate()?;
    optimize_with(&cfg.codec()?, img, cfg)
}

struct Scored {
    pattern: BlockPattern,
    order: usize,
    loss: f64,
    /// `None` for the current assignment, whose evaluation is already held.
    eval: Option<Evaluation>,
}

impl Scored {
    /// Lower loss, then higher level sum, then earlier candidate.
    fn rank(&self, other: &Scored) -> Ordering {
        self.loss
            .total_cmp(&other.loss)
            .then_with(|| Reverse(level_sum(&self.pattern)).cmp(&Reverse(level_sum(&other.pattern))))
            .then_with(|| self.order.cmp(&other.order))
    }
}

/// Runs the search with an arbitrary backend; `cfg.quant_step` is not consulted.
pub fn optimize_with(codec: &dyn CodecBackend, img: &ImagePlanes, cfg: &RdoConfig) -> Result<RdoResult> {
    cfg.validate()?;
    let mut mask = initialize_mask(img, cfg);
    let mut best = evaluate(codec, img, &mask, cfg.lambda_e)?;
    let mut per_pass_losses = vec![best.loss];
    let mut codec_runs = 0u64;

    for _ in 0..cfg.passes {
        for block in 0..mask.n_blocks() {
            let current = mask.block_pattern(block);
            let mut scored: Vec<Scored> = Vec::with_capacity(MAX_CANDIDATES + 1);
            let mut score = |pattern: BlockPattern, scored: &mut Vec<Scored>| -> Result<()> {
                let order = scored.len();
                if pattern == current {
                    scored.push(Scored { pattern, order, loss: best.loss, eval: None });
                } else {
                    let mut trial = mask.clone();
                    trial.set_block_pattern(block, pattern);
                    let eval = evaluate(codec, img, &trial, cfg.lambda_e)?;
                    codec_runs += 1;
                    scored.push(Scored { pattern, order, loss: eval.loss, eval: Some(eval) });
                }
                Ok(())
            };
            for p in UNIFORM_CANDIDATES {
                score(p, &mut scored)?;
            }
            let medium_beats_fine = scored[1].rank(&scored[2]) == Ordering::Less;
            for p in candidates_for_block(medium_beats_fine).into_iter().skip(UNIFORM_CANDIDATES.len()) {
                score(p, &mut scored)?;
            }
            if !scored.iter().any(|s| s.pattern == current) {
                let order = scored.len();
                scored.push(Scored { pattern: current, order, loss: best.loss, eval: None });
            }
            let winner = scored
                .into_iter()
                .min_by(|a, b| a.rank(b))
                .expect("candidate list is never empty");
            if winner.loss > best.loss {
                return Err(Error::Invariant(format!(
                    "loss rose from {} to {} at block {block}",
                    best.loss, winner.loss
                )));
            }
            if let Some(eval) = winner.eval {
                mask.set_block_pattern(block, winner.pattern);
                best = eval;
            }
        }
        per_pass_losses.push(best.loss);
    }

    mask.ensure_valid()
        .map_err(|e| Error::Invariant(format!("optimizer produced an invalid mask: {e}")))?;
    Ok(RdoResult {
        mask,
        bitstream: best.bitstream,
        loss: best.loss,
        rate_bpp: best.rate_bpp,
        ms_ssim: best.ms_ssim,
        psnr_db: best.psnr_db,
        codec_runs,
        per_pass_losses,
    })
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Points sorted by rate.
    pub curve: RdCurve,
    /// Per-preset results in input order.
    pub results: Vec<(Preset, RdoResult)>,
}

/// Optimizes once per preset. Presets run in parallel; output order is fixed.
pub fn sweep(img: &ImagePlanes, presets: &[Preset], cfg: &RdoConfig) -> Result<SweepOutcome> {
    if presets.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one preset".into()));
    }
    let results = presets
        .par_iter()
        .map(|p| optimize(img, &cfg.with_preset(p)).map(|r| (p.clone(), r)))
        .collect::<Result<Vec<_>>>()?;
    let points = results
        .iter()
        .map(|(p, r)| RdPoint {
            label: p.label.clone(),
            rate_bpp: r.rate_bpp,
            ms_ssim: r.ms_ssim,
            psnr_db: r.psnr_db,
        })
        .collect();
    Ok(SweepOutcome {
        curve: RdCurve::from_unsorted(points)?,
        results,
    })
}

/// One row of an encode report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdoSummary {
    pub preset: String,
    pub init: String,
    pub passes: u8,
    pub rate_bpp: f64,
    pub ms_ssim: f64,
    pub psnr: f64,
    pub loss: f64,
    pub codec_runs: u64,
}

impl RdoSummary {
    pub fn new(preset: &str, cfg: &RdoConfig, r: &RdoResult) -> Self {
        RdoSummary {
            preset: preset.to_string(),
            init: cfg.init_mode.to_string(),
            passes: cfg.passes,
            rate_bpp: r.rate_bpp,
            ms_ssim: r.ms_ssim,
            psnr: r.psnr_db,
            loss: r.loss,
            codec_runs: r.codec_runs,
        }
    }
}

/// Appends a row, writing the header first if the file is new or empty.
pub fn append_summary(path: impl AsRef<Path>, row: &RdoSummary) -> Result<()> {
    let path = path.as_ref();
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(row)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_summaries(path: impl AsRef<Path>) -> Result<Vec<RdoSummary>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!("q3".parse::<QualityPreset>().unwrap(), QualityPreset::Q3);
        assert!("Q5".parse::<QualityPreset>().is_err());
        let steps: Vec<f64> = QualityPreset::ALL.iter().map(|p| p.quant_step()).collect();
        assert_eq!(steps, vec![0.08, 0.04, 0.02, 0.01]);
        let lambdas: Vec<f64> = QualityPreset::ALL.iter().map(|p| p.lambda_e()).collect();
        assert_eq!(lambdas, vec![0.5, 0.5, 0.25, 0.125]);
        assert_eq!(QualityPreset::Q1.lambda_t(), 0.08);
        assert_eq!(QualityPreset::Q4.to_string(), "Q4");
    }

    #[test]
    fn config_validation() {
        assert!(RdoConfig::new(QualityPreset::Q2, InitMode::Static, 0).is_err());
        assert!(RdoConfig::new(QualityPreset::Q2, InitMode::VarianceAdaptive, 0).is_ok());
        assert!(RdoConfig::new(QualityPreset::Q2, InitMode::Static, 3).is_err());
        let mut cfg = RdoConfig::new(QualityPreset::Q2, InitMode::Static, 1).unwrap();
        cfg.lambda_e = 0.0;
        assert!(cfg.validate().is_err());
        assert_eq!("var".parse::<InitMode>().unwrap(), InitMode::VarianceAdaptive);
        assert!("dynamic".parse::<InitMode>().is_err());
    }

    #[test]
    fn candidate_enumeration() {
        let c = candidates_for_block(true);
        assert_eq!(&c[..3], &[[3, 3, 3, 3], [2, 2, 2, 2], [1, 1, 1, 1]]);
        assert_eq!(&c[3..], &[[1, 2, 2, 2], [2, 1, 2, 2], [2, 2, 1, 2], [2, 2, 2, 1]]);
        let c = candidates_for_block(false);
        assert_eq!(&c[3..], &[[2, 1, 1, 1], [1, 2, 1, 1], [1, 1, 2, 1], [1, 1, 1, 2]]);
        for medium in [true, false] {
            let c = candidates_for_block(medium);
            assert!(c.len() <= MAX_CANDIDATES);
            for p in c {
                let mut m = MaskField::uniform(1, 1, 3);
                m.set_block_pattern(0, p);
                assert!(m.is_valid());
            }
        }
    }

    #[test]
    fn initialization() {
        let img = ImagePlanes::from_fn(130, 70, |x, _, _| if x > 64 { (x % 2) as f64 } else { 0.4 }).unwrap();
        let s = RdoConfig::new(QualityPreset::Q1, InitMode::Static, 1).unwrap();
        assert_eq!(initialize_mask(&img, &s), MaskField::uniform_for(&img, LEVEL_COARSE));
        let v = RdoConfig::new(QualityPreset::Q1, InitMode::VarianceAdaptive, 1).unwrap();
        assert_eq!(initialize_mask(&img, &v), generate_mask(&img, &VarianceThresholds::default()));
    }

    #[test]
    fn summary_csv_appends_single_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let row = RdoSummary {
            preset: "Q2".into(),
            init: "var".into(),
            passes: 1,
            rate_bpp: 0.5,
            ms_ssim: 0.97,
            psnr: 31.0,
            loss: 0.28,
            codec_runs: 54,
        };
        append_summary(&path, &row).unwrap();
        append_summary(&path, &row).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "preset,init,passes,rate_bpp,ms_ssim,psnr,loss,codec_runs");
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_summaries(&path).unwrap(), vec![row.clone(), row]);
    }
}
