//! Command-line front end: one subcommand per pipeline stage, file outputs plus a
//! `manifest.json` echoing the resolved configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::gabor::{
    cr_residual, dgt, magnitude_gradient_defect, weight_field, FieldKind, GaborField, TfGrid, WeightField,
};
use crate::io::{self, FieldData};
use crate::partition::{recursive_partition, PartitionOptions};
use crate::reconstruct::{reconstruct_from_spectrogram, reconstruction_grid, ReconstructionConfig, Regularization};
use crate::signal::{load_signal, synthesize, to_csv, Signal, SignalFormat, SynthKind, SynthParams};
use crate::spectral::{estimate_cheeger, SpectralOptions};
use crate::stability::{
    compare_signals, count_zeros, experiment_csv, global_variation, instability_experiment, log_derivative_norm,
    DNormParams, ExperimentConfig,
};

const TOOL: &str = "gabor-stab";

#[derive(Debug, Parser, Serialize)]
#[command(name = TOOL, version, about = "Stability analysis for Gabor phase retrieval")]
pub struct Cli {
    /// Directory receiving all output files.
    #[arg(short = 'o', long = "out-dir", global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Seed of the eigensolver start vector.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Gabor transform of a signal: field file and heatmap.
    Transform(TransformArgs),
    /// Spectral Cheeger estimate of |F|^p.
    Cheeger(CheegerArgs),
    /// Recursive partition and stability bound.
    Partition(PartitionArgs),
    /// Mismatch, distance and connectivity of two signals.
    Stability(StabilityArgs),
    /// Two-Gaussian instability sweep.
    Sweep(SweepArgs),
    /// Signal recovery from a spectrogram file.
    Reconstruct(ReconstructArgs),
    /// Holomorphy residual, zero counts and log-derivative growth.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SignalArgs {
    /// Input signal (.wav or .csv).
    #[arg(long = "signal")]
    pub signal: Option<PathBuf>,
    /// Synthesize gaussian, gaussian_pair_plus, gaussian_pair_minus or modulated_gaussian.
    #[arg(long)]
    pub synth: Option<String>,
    #[arg(long, default_value_t = crate::signal::DEFAULT_LENGTH)]
    pub n: usize,
    #[arg(long, default_value_t = crate::signal::DEFAULT_DT)]
    pub dt: f64,
    /// Shift parameter of the synthesized signal.
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    /// Modulation parameter of the synthesized signal.
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    /// Scale loaded signals to unit peak.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    /// Lattice spacing of the time-frequency grid.
    #[arg(long, default_value_t = 0.125)]
    pub delta: f64,
    /// Time half-extent; defaults to the signal's.
    #[arg(long)]
    pub half_x: Option<f64>,
    /// Frequency half-extent; defaults to min(4, Nyquist).
    #[arg(long)]
    pub half_y: Option<f64>,
    /// Use the square N = 1/delta² grid needed by `reconstruct`.
    #[arg(long)]
    pub square: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct TransformArgs {
    #[command(flatten)]
    pub source: SignalArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Also write the spectrogram |V|² as a real field file.
    #[arg(long)]
    pub spectrogram: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FieldSource {
    /// Field file (.tfc) or signal (.wav/.csv).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub source: SignalArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CheegerArgs {
    #[command(flatten)]
    pub field: FieldSource,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Restrict to the disc of this radius around the origin.
    #[arg(long = "radius")]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = crate::spectral::DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub field: FieldSource,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = crate::partition::DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = crate::partition::DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    #[arg(long, default_value_t = crate::partition::DEFAULT_MIN_VERTICES)]
    pub min_vertices: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct StabilityArgs {
    /// First signal (.wav or .csv).
    #[arg(long)]
    pub f: PathBuf,
    /// Second signal (.wav or .csv).
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Second norm exponent; `inf` allowed.
    #[arg(long, default_value = "inf")]
    pub q: String,
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Comma-separated Gaussian separations.
    #[arg(long = "a-list", default_value = "1,1.5,2,2.5,3")]
    pub a_list: String,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value = "inf")]
    pub q: String,
    #[arg(long, default_value_t = 0.125)]
    pub delta: f64,
    #[arg(long, default_value_t = crate::signal::DEFAULT_DT)]
    pub dt: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    /// Spectrogram field file on a square N = 1/delta² grid.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// threshold or tikhonov.
    #[arg(long, default_value = "threshold")]
    pub regularization: String,
    #[arg(long, default_value_t = crate::reconstruct::DEFAULT_TAU_REG)]
    pub tau_reg: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub field: FieldSource,
    /// Comma-separated disc radii for zero counts and log-derivative norms.
    #[arg(long = "radius", default_value = "1,2,3")]
    pub radius: String,
    /// Exponent of the log-derivative norm.
    #[arg(long, default_value_t = 1.5)]
    pub r: f64,
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// Runs the tool on `argv` (including the program name) and returns the exit code:
/// 0 on success, 1 on computation errors, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("error: usage: {first}");
            return 2;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: usage: {msg}");
            2
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {}: {}", e.kind(), e.to_string().replace('\n', " "));
            1
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    let out = |name: &str| cli.out_dir.join(name);
    let spectral = SpectralOptions {
        seed: cli.seed,
        ..SpectralOptions::default()
    };
    let outputs: Vec<&str> = match &cli.command {
        Command::Transform(args) => transform(args, &out)?,
        Command::Cheeger(args) => cheeger(args, spectral, &out)?,
        Command::Partition(args) => partition(args, spectral, &out)?,
        Command::Stability(args) => stability(args, spectral, &out)?,
        Command::Sweep(args) => sweep(args, spectral, &out)?,
        Command::Reconstruct(args) => reconstruct(args, &out)?,
        Command::Diagnose(args) => diagnose(args, &out)?,
    };
    let manifest = json!({
        "tool": TOOL,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "command": &cli.command,
        "outputs": outputs,
    });
    io::write_json(&out("manifest.json"), &manifest)?;
    Ok(())
}

fn load(args: &SignalArgs) -> CliResult<Signal> {
    match (&args.signal, &args.synth) {
        (Some(_), Some(_)) => usage("give either --signal or --synth, not both"),
        (None, None) => usage("an input signal is required (--signal or --synth)"),
        (Some(path), None) => {
            let Some(format) = SignalFormat::from_path(path) else {
                return usage(format!("unrecognized signal extension: {}", path.display()));
            };
            Ok(load_signal(path, format, args.normalize)?)
        }
        (None, Some(kind)) => {
            let kind: SynthKind = kind.parse().or_else(|e: Error| usage(e.to_string()))?;
            Ok(synthesize(kind, SynthParams { a: args.a, b: args.b }, args.n, args.dt)?)
        }
    }
}

fn grid_for(signal: &Signal, args: &GridArgs) -> CliResult<TfGrid> {
    if args.square {
        return Ok(reconstruction_grid(args.delta)?);
    }
    let half_x = args.half_x.unwrap_or_else(|| signal.t0().abs().max(signal.t_end().abs()));
    let half_y = args.half_y.unwrap_or_else(|| (0.5 / signal.dt()).min(4.0));
    Ok(TfGrid::covering(args.delta, half_x, half_y)?)
}

fn parse_list(text: &str, flag: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .or_else(|_| usage(format!("{flag} expects comma-separated numbers, got '{text}'")))
}

fn parse_q(text: &str) -> CliResult<f64> {
    match text {
        "inf" | "infinity" => Ok(f64::INFINITY),
        other => other.parse().or_else(|_| usage(format!("--q expects a number or inf, got '{other}'"))),
    }
}

/// Field from `--in` or a signal source; real files are taken as weights.
fn load_field(src: &FieldSource) -> CliResult<FieldData> {
    if let Some(path) = &src.input {
        if src.source.signal.is_some() || src.source.synth.is_some() {
            return usage("give either --in or a signal source, not both");
        }
        return match SignalFormat::from_path(path) {
            Some(format) => {
                let s = load_signal(path, format, src.source.normalize)?;
                Ok(FieldData::Complex(dgt(&s, &grid_for(&s, &src.grid)?)?))
            }
            None => Ok(io::read_field(path)?),
        };
    }
    let s = load(&src.source)?;
    Ok(FieldData::Complex(dgt(&s, &grid_for(&s, &src.grid)?)?))
}

/// Weights `|F|^p` (or the stored weights) and a complex field whose modulus is `w^{1/p}`.
fn weights_and_field(data: FieldData, p: f64) -> CliResult<(WeightField, GaborField)> {
    match data {
        FieldData::Complex(f) => Ok((weight_field(&f, p)?, f)),
        FieldData::Real { grid, values } => {
            let w = WeightField::new(grid, values.clone(), p)?;
            let modulus = values.mapv(|v| num_complex::Complex64::new(v.powf(1.0 / p), 0.0));
            Ok((w, GaborField::new(grid, modulus, FieldKind::Generic)?))
        }
    }
}

fn transform(args: &TransformArgs, out: &dyn Fn(&str) -> PathBuf) -> CliResult<Vec<&'static str>> {
    let signal = load(&args.source)?;
    let grid = grid_for(&signal, &args.grid)?;
    let field = dgt(&signal, &grid)?;
    io::write_bytes(&out("field.tfc"), &io::encode_field(&field)?)?;
    io::write_text(&out("field.svg"), &io::heatmap_svg(&field.modulus(), &grid, None))?;
    let mut outputs = vec!["field.tfc", "field.svg"];
    if args.spectrogram {
        let s = field.values.mapv(|z| z.norm_sqr());
        io::write_bytes(&out("spectrogram.tfc"), &io::encode_real(&grid, &s)?)?;
        outputs.push("spectrogram.tfc");
    }
    Ok(outputs)
}

fn cheeger(args: &CheegerArgs, mut spectral: SpectralOptions, out: &dyn Fn(&str) -> PathBuf) -> CliResult<Vec<&'static str>> {
    spectral.tol = args.tol;
    spectral.max_iter = args.max_iter;
    let (w, _) = weights_and_field(load_field(&args.field)?, args.p)?;
    let mask = args.radius.map(|r| w.grid.disc_mask(0.0, 0.0, r));
    let est = estimate_cheeger(&w, mask.as_ref(), &spectral)?;
    let report = json!({
        "h_star": est.h_star,
        "h_lower": est.h_lower,
        "lambda2": est.eigen_value,
        "cut_size": est.cut.subset.count(),
        "vol_in": est.cut.vol_in,
        "vol_out": est.cut.vol_out,
        "n_vertices": est.n_vertices,
        "iterations": est.iterations,
        "h_calibrated": est.calibrated(),
        "delta": est.delta,
        "p": args.p,
    });
    io::write_json(&out("cheeger.json"), &report)?;
    println!("{}", serde_json::to_string(&report).map_err(|e| Error::Format(e.to_string()))?);
    Ok(vec!["cheeger.json"])
}

fn partition(args: &PartitionArgs, spectral: SpectralOptions, out: &dyn Fn(&str) -> PathBuf) -> CliResult<Vec<&'static str>> {
    let (w, field) = weights_and_field(load_field(&args.field)?, args.p)?;
    let opts = PartitionOptions {
        tau: args.tau,
        max_depth: args.max_depth,
        min_vertices: args.min_vertices,
        spectral,
    };
    let report = recursive_partition(&w, &field, None, &opts)?;
    io::write_json(&out("partition.json"), &report.summary())?;
    let svg = io::heatmap_svg(&field.modulus(), &field.grid, Some(&report.labels()));
    io::write_text(&out("partition.svg"), &svg)?;
    Ok(vec!["partition.json", "partition.svg"])
}

fn load_path(path: &Path, normalize: bool) -> CliResult<Signal> {
    match SignalFormat::from_path(path) {
        Some(format) => Ok(load_signal(path, format, normalize)?),
        None => usage(format!("unrecognized signal extension: {}", path.display())),
    }
}

fn stability(args: &StabilityArgs, spectral: SpectralOptions, out: &dyn Fn(&str) -> PathBuf) -> CliResult<Vec<&'static str>> {
    let params = DNormParams::new(args.p, parse_q(&args.q)?)?;
    let f = load_path(&args.f, args.normalize)?;
    let g = load_path(&args.g, args.normalize)?;
    let grid = grid_for(&f, &args.grid)?;
    let row = compare_signals(&f, &g, &grid, &params, &spectral)?;
    io::write_text(&out("stability.csv"), &experiment_csv(&[row]))?;
    Ok(vec!["stability.csv"])
}

fn sweep(args: &SweepArgs, spectral: SpectralOptions, out: &dyn Fn(&str) -> PathBuf) -> CliResult<Vec<&'static str>> {
    let a_values = parse_list(&args.a_list, "--a-list")?;
    let params = DNormParams::new(args.p, parse_q(&args.q)?)?;
    let cfg = ExperimentConfig {
        dt: args.dt,
        delta: args.delta,
        spectral,
        ..ExperimentConfig::default()
    };
    let rows = instability_experiment(&a_values, &params, &cfg)?;
    io::write_text(&out("sweep.csv"), &experiment_csv(&rows))?;
    let h: Vec<(f64, f64)> = rows.iter().map(|r| (r.a, r.h_cal)).collect();
    let ratio: Vec<(f64, f64)> = rows.iter().map(|r| (r.a, r.ratio)).collect();
    io::write_text(&out("h_cal.svg"), &io::line_chart_svg("calibrated Cheeger estimate", "a", "h_cal", &h, true))?;
    io::write_text(&out("ratio.svg"), &io::line_chart_svg("empirical ratio", "a", "ratio", &ratio, true))?;
    Ok(vec!["sweep.csv", "h_cal.svg", "ratio.svg"])
}

fn reconstruct(args: &ReconstructArgs, out: &dyn Fn(&str) -> PathBuf) -> CliResult<Vec<&'static str>> {
    let regularization: Regularization = args.regularization.parse().or_else(|e: Error| usage(e.to_string()))?;
    let (grid, s) = match io::read_field(&args.input)? {
        FieldData::Real { grid, values } => (grid, values),
        FieldData::Complex(f) => (f.grid, f.values.mapv(|z| z.norm_sqr())),
    };
    let cfg = ReconstructionConfig::new(regularization, args.tau_reg, grid)?;
    let signal = reconstruct_from_spectrogram(&s, &cfg)?;
    io::write_text(&out("signal.csv"), &to_csv(&signal))?;
    Ok(vec!["signal.csv"])
}

fn diagnose(args: &DiagnoseArgs, out: &dyn Fn(&str) -> PathBuf) -> CliResult<Vec<&'static str>> {
    let radii = parse_list(&args.radius, "--radius")?;
    let field = match load_field(&args.field)? {
        FieldData::Complex(f) if f.kind == FieldKind::Gabor => f,
        _ => return Err(Error::InvalidParameter("diagnose needs a Gabor transform".into()).into()),
    };
    let (centered, shift) = field.centered();
    let (delta_d, delta_tilde) = global_variation(&field, None)?;
    let mut per_radius = Vec::new();
    for &r in &radii {
        let zeros = count_zeros(&centered, r)?;
        let log_d = log_derivative_norm(&centered, args.r, r)?;
        per_radius.push(json!({
            "radius": r,
            "zeros": zeros,
            "zero_bound": 2.0 * std::f64::consts::PI / std::f64::consts::LN_2 * r * r,
            "log_derivative": log_d.norm,
            "log_derivative_ratio": log_d.ratio,
        }));
    }
    let report = json!({
        "cr_residual": cr_residual(&field)?,
        "magnitude_gradient_defect": magnitude_gradient_defect(&field)?,
        "center": [shift.0, shift.1],
        "delta_d": delta_d,
        "delta_tilde": delta_tilde,
        "r": args.r,
        "radii": per_radius,
    });
    io::write_json(&out("diagnose.json"), &report)?;
    Ok(vec!["diagnose.json"])
}
