//! `rdok`: encode, decode, visualize and evaluate mask-optimized streams.
//!
//! Exit codes: 0 success, 1 I/O or corrupt input, 2 invalid flags or
//! incomparable curves, 3 internal invariant violation.

mod overlay;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rdok_core::metrics::{bd_rate, QualityAxis, RdCurve};
use rdok_core::rdo::{self, InitMode, QualityPreset, RdoConfig, RdoSummary};
use rdok_core::selftest::{self, Fault};
use rdok_core::{
    image_io, Bitstream, CodecBackend, CodecConfig, Error, MaskField, SurrogateCodec,
    VarianceThresholds,
};

#[derive(Parser)]
#[command(name = "rdok", version, about = "Block-partition rate-distortion optimized image codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the partition mask and write a .rdok stream.
    Encode {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        rdo: RdoFlags,
        /// Append a summary row to this CSV file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Decode a .rdok stream to PPM.
    Decode { input: PathBuf, output: PathBuf },
    /// Render a partition overlay. A .rdok input shows its transmitted mask;
    /// an image input shows the mask chosen with the given flags.
    Mask {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        rdo: RdoFlags,
    },
    /// Run all four quality presets and write the RD curve as CSV.
    Sweep {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Init::Var)]
        init: Init,
        #[arg(long, default_value_t = 1)]
        passes: u8,
        #[arg(long)]
        th1: Option<f64>,
        #[arg(long)]
        th2: Option<f64>,
    },
    /// Bjøntegaard delta rate of TEST against ANCHOR.
    Bdrate {
        anchor: PathBuf,
        test: PathBuf,
        #[arg(long, value_enum, default_value_t = Axis::Msssim)]
        axis: Axis,
    },
    /// Run the embedded invariant checks.
    Selftest {
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<InjectFault>,
    },
}

#[derive(Args)]
struct RdoFlags {
    #[arg(long, default_value = "Q2")]
    quality: String,
    #[arg(long, value_enum, default_value_t = Init::Var)]
    init: Init,
    #[arg(long, default_value_t = 1)]
    passes: u8,
    /// Override the preset's λ_e.
    #[arg(long)]
    lambda_e: Option<f64>,
    /// Override the preset's quantizer step.
    #[arg(long)]
    quant_step: Option<f64>,
    #[arg(long)]
    th1: Option<f64>,
    #[arg(long)]
    th2: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Static,
    Var,
}

impl From<Init> for InitMode {
    fn from(i: Init) -> Self {
        match i {
            Init::Static => InitMode::Static,
            Init::Var => InitMode::VarianceAdaptive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Msssim,
    Psnr,
}

#[derive(Clone, Copy, ValueEnum)]
enum InjectFault {
    ScaleTable,
}

fn thresholds(th1: Option<f64>, th2: Option<f64>) -> rdok_core::Result<VarianceThresholds> {
    let d = VarianceThresholds::default();
    VarianceThresholds::new(th1.unwrap_or(d.th1), th2.unwrap_or(d.th2))
}

impl RdoFlags {
    fn config(&self) -> rdok_core::Result<(QualityPreset, RdoConfig)> {
        let preset: QualityPreset = self.quality.parse()?;
        let mut cfg = RdoConfig::new(preset, self.init.into(), self.passes)?;
        if let Some(l) = self.lambda_e {
            cfg.lambda_e = l;
        }
        if let Some(q) = self.quant_step {
            cfg.quant_step = q;
        }
        cfg.thresholds = thresholds(self.th1, self.th2)?;
        cfg.validate()?;
        Ok((preset, cfg))
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::InvalidCurve(_) | Error::NoOverlap(..) => 2,
        Error::Invariant(_) => 3,
        _ => 1,
    }
}

fn read_bitstream(path: &Path) -> rdok_core::Result<Bitstream> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    Bitstream::from_bytes(&bytes)
}

fn codec_for(bs: &Bitstream) -> rdok_core::Result<SurrogateCodec> {
    // a bad step here came from the file, not from a flag
    let cfg = CodecConfig::new(f64::from(bs.quant_step))
        .map_err(|e| Error::CorruptStream(e.to_string()))?;
    Ok(SurrogateCodec::new(cfg))
}

fn format_psnr(db: f64) -> String {
    if db.is_infinite() {
        "lossless".into()
    } else {
        format!("{db:.4} dB")
    }
}

fn run(cli: Cli) -> rdok_core::Result<()> {
    match cli.command {
        Command::Encode { input, output, rdo, report } => {
            let (preset, cfg) = rdo.config()?;
            let img = image_io::load_image(&input)?;
            let r = rdo::optimize(&img, &cfg)?;
            let bytes = r.bitstream.to_bytes()?;
            std::fs::write(&output, bytes).map_err(|e| Error::Io { path: output.clone(), source: e })?;
            println!("rate_bpp   {:.6}", r.rate_bpp);
            println!("psnr       {}", format_psnr(r.psnr_db));
            println!("ms_ssim    {:.6}", r.ms_ssim);
            println!("loss       {:.6}", r.loss);
            println!("codec_runs {}", r.codec_runs);
            if let Some(path) = report {
                rdo::append_summary(path, &RdoSummary::new(&preset.to_string(), &cfg, &r))?;
            }
        }
        Command::Decode { input, output } => {
            let bs = read_bitstream(&input)?;
            let img = codec_for(&bs)?.decode(&bs)?;
            image_io::save_image(&img, &output)?;
        }
        Command::Mask { input, output, rdo } => {
            let (_, cfg) = rdo.config()?;
            let is_stream = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("rdok"));
            let (img, mask): (_, MaskField) = if is_stream {
                let bs = read_bitstream(&input)?;
                (codec_for(&bs)?.decode(&bs)?, bs.mask)
            } else {
                let img = image_io::load_image(&input)?;
                let mask = if cfg.passes == 0 {
                    rdo::initialize_mask(&img, &cfg)
                } else {
                    rdo::optimize(&img, &cfg)?.mask
                };
                (img, mask)
            };
            image_io::save_image(&overlay::render(&img, &mask)?, &output)?;
            let n = mask.cells().len();
            println!(
                "cells: {} fine, {} medium, {} coarse of {n}",
                mask.count_level(1),
                mask.count_level(2),
                mask.count_level(3)
            );
        }
        Command::Sweep { input, output, init, passes, th1, th2 } => {
            let mut cfg = RdoConfig::new(QualityPreset::Q1, init.into(), passes)?;
            cfg.thresholds = thresholds(th1, th2)?;
            let img = image_io::load_image(&input)?;
            let out = rdo::sweep(&img, &rdo::default_presets(), &cfg)?;
            out.curve.write_csv(&output)?;
            for p in out.curve.points() {
                println!("{} {:.6} bpp ms_ssim {:.6} psnr {}", p.label, p.rate_bpp, p.ms_ssim, format_psnr(p.psnr_db));
            }
        }
        Command::Bdrate { anchor, test, axis } => {
            let axis = match axis {
                Axis::Msssim => QualityAxis::MsSsimDb,
                Axis::Psnr => QualityAxis::Psnr,
            };
            let r = bd_rate(&RdCurve::read_csv(anchor)?, &RdCurve::read_csv(test)?, axis)?;
            let unit = match axis {
                QualityAxis::MsSsimDb => "MS-SSIM dB",
                QualityAxis::Psnr => "PSNR dB",
            };
            println!("BD-rate {:+.2}%", r.percent);
            println!("interval [{:.4}, {:.4}] {unit}", r.interval.0, r.interval.1);
        }
        Command::Selftest { inject_fault } => {
            let fault = match inject_fault {
                Some(InjectFault::ScaleTable) => Fault::CorruptScaleTable,
                None => Fault::None,
            };
            for check in selftest::run(fault)? {
                println!("ok  {:<16} {}", check.name, check.detail);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
