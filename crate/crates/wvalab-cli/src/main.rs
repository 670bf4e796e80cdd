//! `wvalab`: run weak-value scenarios from a JSON config and write plot-ready tables.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, ScenarioConfig};
use error::CliError;
use output::Output;

#[derive(Debug, Parser)]
#[command(name = "wvalab", version, about = "Weak-value amplification scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed; overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Table format; overrides `output.formats`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Post-selected shift across the weak-to-strong transition.
    Shift,
    /// Information budget against the pre-selection angle.
    Budget,
    /// Averaging and Fisher information under correlated noise.
    Noise,
    /// Run one scheme and write its report and tables.
    Scheme,
    /// Monte Carlo estimation experiment.
    Estimate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Shift => "shift",
            Command::Budget => "budget",
            Command::Noise => "noise",
            Command::Scheme => "scheme",
            Command::Estimate => "estimate",
        }
    }
}

fn run(cli: &Cli) -> Result<serde_json::Value, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    let block = cfg.output.clone();
    let dir = cli
        .out
        .clone()
        .or_else(|| block.as_ref().and_then(|o| o.directory.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let formats = match cli.format {
        Some(f) => vec![f],
        None => block
            .and_then(|o| o.formats)
            .filter(|f| !f.is_empty())
            .unwrap_or_else(|| vec![Format::Csv]),
    };
    let seed = cli.seed.unwrap_or_else(|| cfg.seed());
    let mut out = Output::new(dir, formats, seed, cfg.echo())?;
    let result = match cli.command {
        Command::Shift => commands::shift(&cfg, &mut out),
        Command::Budget => commands::budget(&cfg, &mut out),
        Command::Noise => commands::noise(&cfg, &mut out),
        Command::Scheme => commands::scheme(&cfg, &mut out),
        Command::Estimate => commands::estimate(&cfg, &mut out),
    };
    // Outputs written before a failed check are still listed in the manifest.
    let manifest = out.finish(cli.command.name())?;
    result.map(|_| manifest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) => {
            // A closed stdout (e.g. piped into `head`) must not turn success into a panic.
            let _ = writeln!(
                std::io::stdout(),
                "{}",
                serde_json::to_string_pretty(&manifest).expect("manifest serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
