//! `fecam`: batch front end for the CAM simulator.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical error.

mod config;
mod experiments;
mod output;
mod svg;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FlagOverrides, Format, Kind, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<fecam_core::Error> for CliError {
    fn from(e: fecam_core::Error) -> Self {
        use fecam_core::Error as E;
        match e {
            E::Numerical(_) => CliError::Numerical(e.to_string()),
            E::Io(_) | E::Csv(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fecam", version, about = "1FeFET1R CAM simulator: device sweeps, CAM experiments, HDC genome search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "FECAM_OUT_DIR")]
    out: Option<PathBuf>,
    /// Output format; repeat for several.
    #[arg(long = "format", value_enum)]
    formats: Vec<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// I-V curves of sampled devices, bare and with the limiter.
    DeviceIv(Common),
    /// Matchline current vs mismatch count.
    BcamSweep(Common),
    /// Paired Monte Carlo with and without the series limiter.
    LimiterAblation(Common),
    /// Four-level one-cell worst cases.
    McamWorst(Common),
    /// Sensing latency/energy vs Hamming threshold.
    AdcSweep(Common),
    /// Encode a reference into a CAM-backed index.
    GenomeBuild(Common),
    /// Threshold search of patterns against a reference index.
    GenomeQuery(Common),
    /// Consolidate summaries of earlier runs.
    BenchReport(Common),
    /// Run the experiment named by `kind` in the config file.
    Run(Common),
    /// Print the effective configuration as TOML.
    DumpConfig {
        #[arg(value_enum)]
        kind: Option<Kind>,
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            config::parse(&text)
        }
        None => Ok(RunConfig::default()),
    }
}

fn flags(common: &Common) -> FlagOverrides {
    FlagOverrides {
        seed: common.seed,
        out_dir: common.out.clone(),
        formats: common.formats.clone(),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (kind, common, dump) = match cli.command {
        Command::DeviceIv(c) => (Some(Kind::DeviceIv), c, false),
        Command::BcamSweep(c) => (Some(Kind::BcamSweep), c, false),
        Command::LimiterAblation(c) => (Some(Kind::LimiterAblation), c, false),
        Command::McamWorst(c) => (Some(Kind::McamWorst), c, false),
        Command::AdcSweep(c) => (Some(Kind::AdcSweep), c, false),
        Command::GenomeBuild(c) => (Some(Kind::GenomeBuild), c, false),
        Command::GenomeQuery(c) => (Some(Kind::GenomeQuery), c, false),
        Command::BenchReport(c) => (Some(Kind::BenchReport), c, false),
        Command::Run(c) => (None, c, false),
        Command::DumpConfig { kind, common } => (kind, common, true),
    };
    let file = load(&common)?;
    let file_kind = file.kind;
    let eff = file.resolve(kind.or(file_kind).or(dump.then_some(Kind::BcamSweep)), flags(&common))?;
    if dump {
        print!("{}", eff.to_toml()?);
        return Ok(());
    }
    let artifacts = experiments::run(&eff)?;
    artifacts.write(&eff)?;
    println!("{}", artifacts.line);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fecam: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
