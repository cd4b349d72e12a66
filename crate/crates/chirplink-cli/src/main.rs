//! `chirplink` - LoRa/DLoRa collision simulator CLI.
//!
//! Subcommands:
//! - `wave`: frequency trajectory (CSV) and optional IQ capture of one symbol
//! - `collide`: BER-vs-SIR curve for one reference/interferer channel pair
//! - `matrix`: the 12×12 SIR isolation threshold matrix (CSV + JSON)
//! - `demod-iq`: demodulate a raw IQ capture back into symbols
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error,
//! 3 partial matrix (some pairs not computed, e.g. under `--pairs`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chirplink::exec::Exec;
use chirplink::params::{Channel, ChirpFamily, PhyParams, Symbol};
use chirplink::report::{
    curve_to_csv, load_sweep_config, matrix_to_csv, read_iq_samples, to_json_string, write_text,
    IqTrace, RunManifest,
};
use chirplink::sweep::{build_matrix, sweep_pair, SweepConfig, SweepMode};
use chirplink::waveform::{chirp_samples, instantaneous_frequency};
use chirplink::demod::demodulate_packet;

const TOOL: &str = "chirplink";
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = TOOL, version, about = "Link-level LoRa/DLoRa collision simulator")]
struct Cli {
    /// Worker threads for Monte-Carlo batches (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the frequency trajectory (and optionally IQ samples) of one symbol.
    Wave(WaveArgs),
    /// Sweep the SIR grid for one channel pair and emit the BER curve.
    Collide(CollideArgs),
    /// Build the 12x12 SIR isolation threshold matrix.
    Matrix(MatrixArgs),
    /// Demodulate a raw IQ file (interleaved f32 LE re/im pairs).
    DemodIq(DemodIqArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Up,
    Down,
}

impl From<FamilyArg> for ChirpFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Up => ChirpFamily::Up,
            FamilyArg::Down => ChirpFamily::Down,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct WaveArgs {
    /// Spreading factor, 7..=12.
    #[arg(long)]
    sf: u8,
    /// Chirp direction.
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Symbol value, 0..2^SF.
    #[arg(long)]
    symbol: u32,
    /// Bandwidth in Hz.
    #[arg(long, default_value_t = 125_000.0)]
    bandwidth: f64,
    /// Write the frequency CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write chip-rate IQ samples (plus a .json sidecar) to this path.
    #[arg(long)]
    iq_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config file; missing keys take the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the lower end of the SIR grid (dB).
    #[arg(long, allow_hyphen_values = true)]
    sir_min: Option<f64>,
    /// Override the upper end of the SIR grid (dB).
    #[arg(long, allow_hyphen_values = true)]
    sir_max: Option<f64>,
    /// Override the SIR grid step (dB).
    #[arg(long)]
    sir_step: Option<f64>,
}

impl SweepArgs {
    fn resolve(&self) -> Result<SweepConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => load_sweep_config(path).map_err(usage)?,
            None => SweepConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(v) = self.sir_min {
            cfg.sir_min_db = v;
        }
        if let Some(v) = self.sir_max {
            cfg.sir_max_db = v;
        }
        if let Some(v) = self.sir_step {
            cfg.sir_step_db = v;
        }
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct CollideArgs {
    /// Reference channel label: 7..12 or 7_D..12_D.
    #[arg(long = "ref")]
    ref_channel: String,
    /// Interfering channel label: 7..12 or 7_D..12_D.
    #[arg(long = "int")]
    int_channel: String,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Evaluate the whole grid instead of stopping after the threshold
    /// crossing is confirmed.
    #[arg(long)]
    full: bool,
    /// Output file; stdout when omitted (a manifest is written only with --out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Curve file format.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Restrict the run to these ref:int pairs, e.g. "7:8,7:7_D,12_D:9".
    #[arg(long)]
    pairs: Option<String>,
    /// Output stem; writes <stem>.csv, <stem>.json and <stem>.manifest.json.
    #[arg(long, default_value = "matrix")]
    out: PathBuf,
}

#[derive(Args)]
struct DemodIqArgs {
    /// Raw IQ file: interleaved little-endian f32 (re, im) pairs.
    #[arg(long = "in")]
    input: PathBuf,
    /// Spreading factor of the capture, 7..=12.
    #[arg(long)]
    sf: u8,
    /// Chirp direction of the capture.
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Bandwidth in Hz.
    #[arg(long, default_value_t = 125_000.0)]
    bandwidth: f64,
    /// Write the symbol CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

impl From<chirplink::Error> for Failure {
    fn from(e: chirplink::Error) -> Self {
        match e {
            chirplink::Error::InvalidParameter(_)
            | chirplink::Error::InvalidInput(_)
            | chirplink::Error::Parse { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_workers(cli.workers);
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        // Ignore the error when a pool already exists (e.g. repeated init in
        // tests); the run stays deterministic either way.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_workers(workers: Option<usize>) {
    if workers.is_some() {
        eprintln!("note: built without the 'parallel' feature; --workers is ignored");
    }
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Wave(args) => cmd_wave(args),
        Command::Collide(args) => cmd_collide(args),
        Command::Matrix(args) => cmd_matrix(args),
        Command::DemodIq(args) => cmd_demod_iq(args),
    }
}

fn cmd_wave(args: WaveArgs) -> Result<ExitCode, Failure> {
    let params = PhyParams::new(args.sf, args.bandwidth).map_err(usage)?;
    if args.symbol >= params.m() as u32 {
        return Err(Failure::Usage(format!(
            "symbol {} out of range 0..{} for SF{}",
            args.symbol,
            params.m(),
            args.sf
        )));
    }
    let symbol = args.symbol as Symbol;
    let family: ChirpFamily = args.family.into();

    let mut csv = String::from("t_s,frequency_hz\n");
    let b = params.bandwidth_hz();
    for n in 0..params.m() {
        let t = n as f64 / b;
        let f = instantaneous_frequency(&params, family, symbol, t)?;
        csv.push_str(&format!("{t},{f}\n"));
    }
    match &args.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }

    if let Some(iq_path) = &args.iq_out {
        let trace = IqTrace {
            sample_rate_hz: b,
            channel: Channel::new(args.sf, family).map_err(usage)?,
            samples: chirp_samples(&params, family, symbol)?,
        };
        trace.write(iq_path)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_collide(args: CollideArgs) -> Result<ExitCode, Failure> {
    let cfg = args.sweep.resolve()?;
    let ref_channel = Channel::parse_label(&args.ref_channel).map_err(usage)?;
    let int_channel = Channel::parse_label(&args.int_channel).map_err(usage)?;
    let mode = if args.full {
        SweepMode::FullGrid
    } else {
        SweepMode::EarlyExit
    };
    let curve = sweep_pair(ref_channel, int_channel, &cfg, mode, Exec::Auto)?;

    let rendered = match args.format {
        FormatArg::Csv => curve_to_csv(&curve),
        FormatArg::Json => to_json_string(&curve),
    };
    match &args.out {
        Some(path) => {
            write_text(path, &rendered)?;
            let mut manifest = RunManifest::new(TOOL, VERSION, now_utc(), cfg);
            manifest.record_curve(&curve, cfg.target_ber);
            write_text(&manifest_path(path), &to_json_string(&manifest))?;
        }
        None => print!("{rendered}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_matrix(args: MatrixArgs) -> Result<ExitCode, Failure> {
    let cfg = args.sweep.resolve()?;
    let filter = match &args.pairs {
        Some(list) => Some(parse_pairs(list)?),
        None => None,
    };
    let matrix = build_matrix(&cfg, filter.as_deref(), Exec::Auto)?;

    let stem = args.out;
    write_text(&with_suffix(&stem, ".csv"), &matrix_to_csv(&matrix))?;
    write_text(&with_suffix(&stem, ".json"), &to_json_string(&matrix))?;
    let mut manifest = RunManifest::new(TOOL, VERSION, now_utc(), cfg);
    manifest.record_matrix(&matrix);
    write_text(&with_suffix(&stem, ".manifest.json"), &to_json_string(&manifest))?;

    if matrix.complete() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

fn cmd_demod_iq(args: DemodIqArgs) -> Result<ExitCode, Failure> {
    let params = PhyParams::new(args.sf, args.bandwidth).map_err(usage)?;
    let samples = read_iq_samples(&args.input)?;
    let n_chirps = samples.len() / params.m();
    if n_chirps == 0 {
        return Err(Failure::Usage(format!(
            "{} holds {} samples, fewer than one SF{} symbol ({} chips)",
            args.input.display(),
            samples.len(),
            args.sf,
            params.m()
        )));
    }
    if samples.len() % params.m() != 0 {
        eprintln!(
            "note: ignoring {} trailing samples (not a whole symbol)",
            samples.len() % params.m()
        );
    }
    let symbols = demodulate_packet(&samples, &params, args.family.into(), n_chirps)?;
    let mut csv = String::from("index,symbol\n");
    for (i, s) in symbols.iter().enumerate() {
        csv.push_str(&format!("{i},{s}\n"));
    }
    match &args.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_pairs(list: &str) -> Result<Vec<(Channel, Channel)>, Failure> {
    let mut pairs = Vec::new();
    for item in list.split(',') {
        let (r, i) = item.split_once(':').ok_or_else(|| {
            Failure::Usage(format!(
                "invalid pair '{item}': expected REF:INT, e.g. 7:8 or 12:7_D"
            ))
        })?;
        pairs.push((
            Channel::parse_label(r).map_err(usage)?,
            Channel::parse_label(i).map_err(usage)?,
        ));
    }
    if pairs.is_empty() {
        return Err(Failure::Usage("--pairs list is empty".into()));
    }
    Ok(pairs)
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_os_string();
    s.push(suffix);
    s.into()
}

fn now_utc() -> String {
    chrono::Utc::now().to_rfc3339()
}
