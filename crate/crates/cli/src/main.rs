mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Run;

#[derive(Parser)]
#[command(name = "spectral-svar", version, about = "Exact spectra, separation queries and identification for SVAR graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
pub struct Sets {
    /// Comma-separated labels.
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub y: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub z: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Query {
    Dsep,
    Tsep,
    Rank,
    Treks,
}

#[derive(Subcommand)]
pub enum Command {
    /// Parse a graph (and optionally parameters) and check all invariants.
    Validate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// d-separation, minimal t-separation, generic rank, or trek listing.
    Query {
        #[arg(value_enum)]
        query: Query,
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        sets: Sets,
        /// Required for `rank`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
    /// Transfer matrix, internal spectra and spectrum of explicit parameters.
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Identify link functions from exact parameters, a spectrum file, or
    /// parameters sampled with a seed.
    Identify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, conflicts_with_all = ["spectrum", "seed"])]
        params: Option<PathBuf>,
        #[arg(long, conflicts_with = "seed")]
        spectrum: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Further seeds tried after a singular system.
        #[arg(long, default_value_t = 3)]
        retries: usize,
        /// Numerator bound of sampled coefficients `n/64`.
        #[arg(long, default_value_t = spectral_svar::svar::DEFAULT_MAGNITUDE)]
        magnitude: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the steps of a certificate on another spectrum.
    Replay {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long, conflicts_with = "spectrum")]
        params: Option<PathBuf>,
        #[arg(long)]
        spectrum: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the structural recursion and write observed columns as CSV.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Welch estimate of the spectral matrix of a CSV series.
    Estimate {
        #[arg(long)]
        series: PathBuf,
        /// A count `K` for the grid `pi (j + 1/2) / K`, or a comma-separated
        /// list of angles.
        #[arg(long)]
        frequencies: String,
        /// Segment length in samples.
        #[arg(long)]
        segments: usize,
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// CPDAG from d-separation (`--graph`), the exact spectrum (`--graph`
    /// and `--params`) or an estimated spectrum (`--spectrum`).
    Discover {
        #[arg(long, required_unless_present = "spectrum")]
        graph: Option<PathBuf>,
        #[arg(long, requires = "graph")]
        params: Option<PathBuf>,
        #[arg(long, conflicts_with = "graph")]
        spectrum: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Query { .. } => "query",
            Command::Spectrum { .. } => "spectrum",
            Command::Identify { .. } => "identify",
            Command::Replay { .. } => "replay",
            Command::Simulate { .. } => "simulate",
            Command::Estimate { .. } => "estimate",
            Command::Discover { .. } => "discover",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut run = Run::new(cli.command.name());
    let result = commands::execute(&cli.command, &mut run);
    if let Err(e) = &result {
        eprintln!("error: {}", e.message);
    }
    let report = run.finish(result);
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    ExitCode::from(report.exit_code as u8)
}
