mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Format;
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "agelens", version, about = "Tunable-lens presbyopia simulator")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Simulated decade: baseline, 40s, 50s or 60s.
    #[arg(long, global = true)]
    mode: Option<agelens_core::AgeMode>,

    /// Root seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print lens deltas, target amplitudes and switching thresholds.
    Table,
    /// Measure near points on the virtual push-up rig.
    Pushup,
    /// Run a sensor trace CSV through the controller and emit the command log.
    Replay { trace: PathBuf },
    /// Run the synthetic-population study and compare medians to reference values.
    Study,
    /// Blur an 8-bit PGM/PPM image with a depth map (16-bit PGM or CSV, mm).
    Render { image: PathBuf, depth: PathBuf },
    /// Find corrective offsets for the configured virtual eyes.
    Calibrate,
}

fn run(cli: &Cli) -> agelens_core::Result<Option<String>> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(mode) = cli.mode {
        cfg.mode = Some(mode);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let report = match &cli.command {
        Command::Table => commands::table(cli.format)?,
        Command::Pushup => commands::pushup(&cfg, cli.format)?,
        Command::Replay { trace } => commands::replay_trace(&cfg, trace)?,
        Command::Study => commands::study(&cfg, cli.format)?,
        Command::Calibrate => commands::calibrate(&cfg, cli.format)?,
        Command::Render { image, depth } => {
            let Some(out) = &cli.out else {
                return Err(agelens_core::Error::InvalidArgument(
                    "render needs --out".into(),
                ));
            };
            eprint!("{}", commands::render(&cfg, image, depth, out)?);
            return Ok(None);
        }
    };
    Ok(Some(report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(report)) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, report.as_bytes()),
                None => std::io::stdout().write_all(report.as_bytes()),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
