use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emfe_core::cli::{self, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "emfe",
    version,
    about = "Massive-MIMO exposure-constrained beamforming simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one channel sample and write exposure maps and a comparison table.
    Snapshot {
        #[command(flatten)]
        opts: Options,
        /// Also write grayscale PGM images of each exposure map.
        #[arg(long)]
        emit_maps: bool,
    },
    /// Run a Monte Carlo batch and write empirical CDFs.
    Montecarlo {
        #[command(flatten)]
        opts: Options,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and check a configuration, then print it in canonical form.
    Validate {
        #[command(flatten)]
        opts: Options,
    },
}

#[derive(Args)]
struct Options {
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    circle_samples: Option<usize>,
    /// Comma-separated subset of mrt,reduced,equalized.
    #[arg(long)]
    schemes: Option<String>,
    /// Drop the RIS paths.
    #[arg(long)]
    no_ris: bool,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Options {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut overrides: Vec<(&str, String)> = Vec::new();
        if let Some(v) = self.seed {
            overrides.push(("seed", v.to_string()));
        }
        if let Some(v) = self.samples {
            overrides.push(("sample_count", v.to_string()));
        }
        if let Some(v) = self.grid_step {
            overrides.push(("grid_step", v.to_string()));
        }
        if let Some(v) = self.circle_samples {
            overrides.push(("circle_samples", v.to_string()));
        }
        if let Some(v) = &self.schemes {
            overrides.push(("schemes", v.clone()));
        }
        if self.no_ris {
            overrides.push(("ris_enabled", "false".into()));
        }
        if let Some(v) = &self.out {
            overrides.push(("out_dir", v.display().to_string()));
        }
        cli::load_config(self.config.as_deref(), &overrides)
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Snapshot { opts, emit_maps } => {
            let config = opts.load()?;
            let out = cli::cmd_snapshot(&config, emit_maps)?;
            print!("{}", out.report);
            eprintln!(
                "wrote {} files to {}",
                out.files.len(),
                config.out_dir.display()
            );
        }
        Command::Montecarlo { opts, threads } => {
            let config = opts.load()?;
            let out = cli::cmd_montecarlo(&config, threads)?;
            for line in cli::summary_lines(&out.batch)? {
                println!("{line}");
            }
            eprintln!(
                "wrote {} files to {}",
                out.files.len(),
                config.out_dir.display()
            );
        }
        Command::Validate { opts } => {
            let config = opts.load()?;
            print!("{}", config.to_config_string());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
