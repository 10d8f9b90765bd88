//! Command-line surface for the steerable-DCT codec: encode, decode,
//! analyze, sweep and selftest workflows.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 format, 4 invariant failure.

mod selftest;

use clap::{Args, Parser, Subcommand};
use sdct::codec::{
    audit_bitstream, decode_image_stats, encode_image, Algorithm, ArithFlavor, EncoderConfig,
    SampleFormat,
};
use sdct::error::SdctError;
use sdct::eval::{
    bd_psnr, curves_to_plot_data, points_to_csv, rd_sweep, LambdaPolicy, RdCurve, SweepConfig,
};
use sdct::image::{read_image, read_pgm, read_res16, write_pgm, write_res16, GrayImage};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_FORMAT: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "sdct",
    about = "Steerable-DCT image codec and evaluation harness",
    version
)]
struct Cli {
    /// Worker threads for block-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a PGM image or res16 residual plane into a bitstream.
    Encode(EncodeArgs),
    /// Reconstruct the image from a bitstream.
    Decode(DecodeArgs),
    /// Inspect a bitstream: header, mode usage, bit accounting.
    Analyze(AnalyzeArgs),
    /// Rate-distortion sweeps with a BD-PSNR summary against the DCT.
    Sweep(SweepArgs),
    /// Run the built-in invariant suites at desk scale.
    Selftest(SelftestArgs),
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    match s {
        "dct" => Ok(Algorithm::DctOnly),
        "sdct1" => Ok(Algorithm::Sdct1),
        "sdct-am" => Ok(Algorithm::SdctAm),
        "sdct-bt" => Ok(Algorithm::SdctBt),
        _ => Err(format!(
            "unknown algorithm {s:?}; expected dct, sdct1, sdct-am or sdct-bt"
        )),
    }
}

fn parse_lambda_policy(s: &str) -> Result<LambdaPolicy, String> {
    if s == "paired" {
        return Ok(LambdaPolicy::default());
    }
    if let Some(v) = s.strip_prefix("fixed:") {
        let v: f64 = v
            .parse()
            .map_err(|_| format!("bad fixed lambda value {v:?}"))?;
        if v < 0.0 {
            return Err("lambda must be nonnegative".into());
        }
        return Ok(LambdaPolicy::Fixed(v));
    }
    if let Some(v) = s.strip_prefix("paired:") {
        let c0: f64 = v
            .parse()
            .map_err(|_| format!("bad pairing constant {v:?}"))?;
        return Ok(LambdaPolicy::Paired { c0 });
    }
    Err(format!(
        "unknown lambda policy {s:?}; expected paired, paired:C0 or fixed:VALUE"
    ))
}

#[derive(Args)]
struct CodingFlags {
    /// Transform selection algorithm.
    #[arg(long, value_parser = parse_algorithm, default_value = "sdct-am")]
    algorithm: Algorithm,
    /// Block side length.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Coefficient quantizer step.
    #[arg(long, default_value_t = 8.0)]
    step: f64,
    /// Lagrangian policy: paired, paired:C0 or fixed:VALUE.
    #[arg(long = "lambda-policy", value_parser = parse_lambda_policy, default_value = "paired")]
    lambda_policy: LambdaPolicy,
    /// Angle quantization levels.
    #[arg(long = "q-theta", default_value_t = 8)]
    q_theta: usize,
    /// Use the integer-approximate transform path.
    #[arg(long)]
    integer: bool,
}

#[derive(Args)]
struct EncodeArgs {
    /// Input image (.pgm or .res16).
    input: PathBuf,
    /// Output bitstream path.
    output: PathBuf,
    #[command(flatten)]
    coding: CodingFlags,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input bitstream.
    input: PathBuf,
    /// Output image path (format follows the bitstream header).
    output: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Bitstream to inspect.
    input: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory of .pgm/.res16 images; omit to use the built-in corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Algorithms to sweep (comma separated); the DCT baseline is always
    /// computed for the BD comparison.
    #[arg(long, value_parser = parse_algorithm, value_delimiter = ',', default_value = "sdct-am,sdct-bt")]
    algorithms: Vec<Algorithm>,
    /// Block side length.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Quantizer steps (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = vec![4.0, 8.0, 16.0, 32.0])]
    steps: Vec<f64>,
    #[arg(long = "lambda-policy", value_parser = parse_lambda_policy, default_value = "paired")]
    lambda_policy: LambdaPolicy,
    #[arg(long)]
    integer: bool,
    /// Exclude the container header from bpp.
    #[arg(long)]
    exclude_header: bool,
    /// Write per-point CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write BD summary CSV here.
    #[arg(long = "bd-csv")]
    bd_csv: Option<PathBuf>,
    /// Write gnuplot-ready curve data here.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Override the integer transform table (fault injection hook).
    #[arg(long = "int-table")]
    int_table: Option<PathBuf>,
}

fn exit_code_for(err: &SdctError) -> u8 {
    match err {
        SdctError::Io(_) => EXIT_IO,
        SdctError::BadMagic
        | SdctError::Truncated(_)
        | SdctError::MalformedTree(_)
        | SdctError::MalformedStream(_)
        | SdctError::ImageFormat(_)
        | SdctError::BadIntegerTable(_)
        | SdctError::MissingIntegerTable(_) => EXIT_FORMAT,
        SdctError::InvalidSize(_)
        | SdctError::UnsupportedBlockSize(_)
        | SdctError::InvalidParam(_)
        | SdctError::EmptyInput(_)
        | SdctError::AngleLengthMismatch { .. }
        | SdctError::SizeMismatch(_)
        | SdctError::CurveError(_) => EXIT_USAGE,
    }
}

/// Write through a temp file and rename so outputs are atomic.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SdctError> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn cmd_encode(args: &EncodeArgs) -> Result<u8, SdctError> {
    let bytes = std::fs::read(&args.input)?;
    let (image, sample_format) = if bytes.starts_with(sdct::image::RES16_MAGIC) {
        (read_res16(&bytes)?, SampleFormat::Res16)
    } else {
        (read_pgm(&bytes)?, SampleFormat::Pgm8)
    };
    let cfg = EncoderConfig {
        algorithm: args.coding.algorithm,
        block_size: args.coding.n,
        coeff_step: args.coding.step,
        lambda: args.coding.lambda_policy.resolve(args.coding.step),
        q_theta: args.coding.q_theta,
        flavor: if args.coding.integer {
            ArithFlavor::Integer
        } else {
            ArithFlavor::Float
        },
        sample_format,
    };
    let out = encode_image(&image, &cfg)?;
    write_atomic(&args.output, &out.bytes)?;
    let psnr = sdct::eval::psnr(&image, &out.reconstruction, 255.0)?;
    let ssim = sdct::eval::ssim(&image, &out.reconstruction)?;
    let angle_bits: usize = out.block_stats.iter().map(|b| b.angle_bits).sum();
    let dir_blocks = out.block_stats.iter().filter(|b| b.directional).count();
    println!(
        "encoded {}x{} in {} blocks (n={}, {}, {})",
        image.width,
        image.height,
        out.block_stats.len(),
        cfg.block_size,
        cfg.algorithm.name(),
        if args.coding.integer {
            "integer"
        } else {
            "float"
        },
    );
    println!(
        "bits: {} ({} bytes), bpp: {:.4}, lambda: {:.4}",
        out.total_bits(),
        out.bytes.len(),
        out.bits_per_pixel(),
        cfg.lambda
    );
    println!("psnr: {:.2} dB, ssim: {:.4}", psnr, ssim);
    println!(
        "directional blocks: {:.1}% ({}/{}), mean subbands: {:.2}",
        100.0 * out.directional_fraction(),
        dir_blocks,
        out.block_stats.len(),
        out.mean_subbands()
    );
    println!(
        "angle bits: {} ({:.2}% of stream)",
        angle_bits,
        100.0 * angle_bits as f64 / out.total_bits() as f64
    );
    Ok(0)
}

fn cmd_decode(args: &DecodeArgs) -> Result<u8, SdctError> {
    let bytes = std::fs::read(&args.input)?;
    let outcome = decode_image_stats(&bytes)?;
    let encoded = match outcome.header.sample_format {
        SampleFormat::Pgm8 => write_pgm(&outcome.image),
        SampleFormat::Res16 => write_res16(&outcome.image),
    };
    write_atomic(&args.output, &encoded)?;
    println!(
        "decoded {}x{} ({} blocks, n={}, {})",
        outcome.image.width,
        outcome.image.height,
        outcome.block_stats.len(),
        outcome.header.block_size,
        outcome.header.algorithm.name()
    );
    Ok(0)
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<u8, SdctError> {
    let bytes = std::fs::read(&args.input)?;
    let outcome = decode_image_stats(&bytes)?;
    let audit = audit_bitstream(&bytes)?;
    let h = &outcome.header;
    println!("header:");
    println!("  dimensions: {}x{}", h.width, h.height);
    println!("  block size: {}", h.block_size);
    println!("  algorithm: {}", h.algorithm.name());
    println!(
        "  flavor: {}",
        match h.flavor {
            ArithFlavor::Float => "float",
            ArithFlavor::Integer => "integer",
        }
    );
    println!("  coeff step: {}", h.coeff_step);
    println!("  lambda: {}", h.lambda);
    println!("  q_theta: {}", h.q_theta);
    let blocks = outcome.block_stats.len();
    let dir = outcome.block_stats.iter().filter(|b| b.directional).count();
    let mean_s = if dir > 0 {
        outcome
            .block_stats
            .iter()
            .filter(|b| b.directional)
            .map(|b| b.subbands as f64)
            .sum::<f64>()
            / dir as f64
    } else {
        0.0
    };
    println!(
        "blocks: {blocks}, directional: {dir} ({:.1}%), mean subbands: {mean_s:.2}",
        100.0 * dir as f64 / blocks.max(1) as f64
    );
    println!("bit accounting:");
    println!("  header:        {:>10}", audit.header_bits);
    println!("  mode bits:     {:>10}", audit.mode_bits);
    println!("  angle/tree:    {:>10}", audit.angle_bits);
    println!("  padding:       {:>10}", audit.pad_bits);
    println!("  length fields: {:>10}", audit.length_field_bits);
    println!("  coefficients:  {:>10}", audit.coeff_bits);
    println!(
        "  total:         {:>10} (file: {} bits)",
        audit.total(),
        bytes.len() * 8
    );
    if audit.total() != bytes.len() * 8 {
        return Err(SdctError::MalformedStream(
            "bit accounting does not cover the file".into(),
        ));
    }
    Ok(0)
}

fn load_corpus(dir: &Option<PathBuf>) -> Result<Vec<(String, GrayImage)>, SdctError> {
    match dir {
        None => Ok(sdct::corpus::builtin_corpus()
            .into_iter()
            .map(|(name, img)| (name.to_string(), img))
            .collect()),
        Some(dir) => {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    matches!(
                        p.extension().and_then(|e| e.to_str()),
                        Some("pgm") | Some("res16")
                    )
                })
                .collect();
            entries.sort();
            if entries.is_empty() {
                return Err(SdctError::EmptyInput(format!(
                    "no .pgm or .res16 files in {}",
                    dir.display()
                )));
            }
            entries
                .into_iter()
                .map(|p| {
                    let name = p
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .unwrap_or("image")
                        .to_string();
                    Ok((name, read_image(&p)?))
                })
                .collect()
        }
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8, SdctError> {
    let corpus = load_corpus(&args.corpus)?;
    let sweep = SweepConfig {
        steps: args.steps.clone(),
        lambda: args.lambda_policy,
        flavor: if args.integer {
            ArithFlavor::Integer
        } else {
            ArithFlavor::Float
        },
        q_theta: 8,
        include_header_bits: !args.exclude_header,
    };
    let mut all_points = Vec::new();
    let mut all_curves: Vec<RdCurve> = Vec::new();
    let mut bd_rows = Vec::new();
    for (name, image) in &corpus {
        let baseline = rd_sweep(image, name, Algorithm::DctOnly, args.n, &sweep)?;
        for &alg in &args.algorithms {
            let curve = if alg == Algorithm::DctOnly {
                baseline.clone()
            } else {
                rd_sweep(image, name, alg, args.n, &sweep)?
            };
            if alg != Algorithm::DctOnly {
                bd_rows.push((name.clone(), args.n, alg, bd_psnr(&baseline, &curve)?));
            }
            all_points.extend(curve.points.clone());
            all_curves.push(curve);
        }
        all_points.extend(baseline.points.clone());
        all_curves.push(baseline);
    }
    let csv = points_to_csv(&all_points);
    match &args.csv {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    let bd = sdct::eval::bd_summary_csv(&bd_rows);
    match &args.bd_csv {
        Some(path) => write_atomic(path, bd.as_bytes())?,
        None => print!("{bd}"),
    }
    if let Some(path) = &args.plot {
        write_atomic(path, curves_to_plot_data(&all_curves).as_bytes())?;
    }
    for (name, n, alg, gain) in &bd_rows {
        eprintln!("BD-PSNR {name} n={n} {}: {gain:+.3} dB vs dct", alg.name());
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success, everything else is usage
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized");
        }
    }
    let result = match &cli.command {
        Command::Encode(args) => cmd_encode(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Selftest(args) => selftest::run(args.int_table.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
