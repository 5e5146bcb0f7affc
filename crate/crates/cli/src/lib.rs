//! Command-line front end: argument surface, error mapping and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mirage_core::channel::ChannelError;
use mirage_core::codec::CodecError;
use mirage_core::genclient::GenError;
use mirage_core::pipeline::PipelineError;
use mirage_core::transport::Scheme;
use thiserror::Error;

pub mod commands;
pub mod ingest;
pub mod output;

pub use ingest::{export, ingest, IngestError, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const DEFAULT_BANDWIDTH_HZ: f64 = 20e6;
pub const DEFAULT_OVERHEAD_S: f64 = 0.05;
pub const DEFAULT_CAPTION: &str = "a red kite drifts over a wind-swept beach while waves roll in from the left";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mirage", version, about = "Semantic video transmission simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scheme over one channel and write its transmission record.
    Simulate(SimulateArgs),
    /// Run schemes over a grid of SNRs and seeds and write a CSV.
    Sweep(SweepArgs),
    /// Train a VQ-VAE on a frame directory and write its codebook.
    TrainCodebook(TrainArgs),
    /// Compute the per-scheme speedup report from a sizes file.
    #[command(name = "table1")]
    Table1(Table1Args),
    /// Build a personalized generation request and write the generated frames.
    GenRequest(GenArgs),
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse::<Scheme>().map_err(|e| e.to_string())
}

/// Options shared by `simulate` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    /// Quantization depth for raw and autoencoder codes.
    #[arg(long, default_value_t = 8)]
    pub q: u8,
    /// VQ codebook size. Defaults to the loaded codebook's size, else 256.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Keyframe budget for the Mirage schemes.
    #[arg(long, default_value_t = 1)]
    pub keyframes: usize,
    /// Caption text file. A built-in caption is used when absent.
    #[arg(long)]
    pub caption: Option<PathBuf>,
    /// Frame directory with manifest.json. The synthetic test video is used when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long = "bandwidth-hz", default_value_t = DEFAULT_BANDWIDTH_HZ)]
    pub bandwidth_hz: f64,
    /// Fixed per-transmission overhead in seconds.
    #[arg(long = "overhead-s", default_value_t = DEFAULT_OVERHEAD_S)]
    pub overhead_s: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Scheme,
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    pub snr_db: f64,
    /// Codebook written by `train-codebook`; its `.model.json` companion must sit beside it.
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: SchemeArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Comma-separated SNR values in dB.
    #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub snr_db: Vec<f64>,
    /// Comma-separated scheme names.
    #[arg(long, value_delimiter = ',', value_parser = parse_scheme, required = true)]
    pub schemes: Vec<Scheme>,
    /// Number of channel seeds per cell; seeds run from 0.
    #[arg(long)]
    pub seeds: u64,
    /// Seed for model training.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: SchemeArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long)]
    pub patch: usize,
    #[arg(long)]
    pub latent: usize,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct Table1Args {
    /// JSON map from scheme name to KB, either a number or {"frame", "text"}.
    #[arg(long)]
    pub sizes: PathBuf,
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    pub snr_db: f64,
    #[arg(long = "bandwidth-hz")]
    pub bandwidth_hz: f64,
    #[arg(long = "overhead-s", default_value_t = DEFAULT_OVERHEAD_S)]
    pub overhead_s: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Caption text file.
    #[arg(long)]
    pub caption: PathBuf,
    #[arg(long, default_value = "")]
    pub identity: String,
    #[arg(long, default_value = "")]
    pub style: String,
    /// Keyframe directory: a manifest directory, or loose .ppm files taken in name order.
    #[arg(long)]
    pub keyframes: PathBuf,
    #[arg(long)]
    pub frames: usize,
    /// Use the built-in deterministic generator.
    #[arg(long, conflicts_with = "endpoint")]
    pub mock: bool,
    /// Generation service URL. Falls back to MIRAGE_GEN_ENDPOINT.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Output frame width; defaults to the keyframe width.
    #[arg(long)]
    pub width: Option<usize>,
    /// Output frame height; defaults to the keyframe height.
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Messages go to stdout or stderr.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_snr_lists() {
        let cli = Cli::try_parse_from([
            "mirage",
            "sweep",
            "--snr-db",
            "-10,-5,10",
            "--schemes",
            "raw,mirage-vq",
            "--seeds",
            "2",
            "--out",
            "x.csv",
        ])
        .unwrap();
        let Command::Sweep(a) = cli.command else { panic!() };
        assert_eq!(a.snr_db, vec![-10.0, -5.0, 10.0]);
        assert_eq!(a.schemes, vec![Scheme::Raw, Scheme::MirageVq]);
    }

    #[test]
    fn negative_single_snr() {
        let cli =
            Cli::try_parse_from(["mirage", "simulate", "--scheme", "raw", "--snr-db", "-10", "--seed", "1", "--out", "r.json"]).unwrap();
        let Command::Simulate(a) = cli.command else { panic!() };
        assert_eq!(a.snr_db, -10.0);
        assert_eq!(a.common.k, None);
    }

    #[test]
    fn unknown_flags_and_schemes_are_usage_errors() {
        assert_eq!(main_with_args(["mirage", "table1", "--bogus"]), EXIT_USAGE);
        assert_eq!(
            main_with_args(["mirage", "simulate", "--scheme", "jpeg", "--snr-db", "0", "--seed", "1", "--out", "r.json"]),
            EXIT_USAGE
        );
        assert_eq!(main_with_args(["mirage"]), EXIT_USAGE);
    }

    #[test]
    fn mock_and_endpoint_conflict() {
        let r = Cli::try_parse_from([
            "mirage",
            "gen-request",
            "--caption",
            "c",
            "--keyframes",
            "k",
            "--frames",
            "4",
            "--mock",
            "--endpoint",
            "http://x",
            "--out",
            "o",
        ]);
        assert!(r.is_err());
    }
}
