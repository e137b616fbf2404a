use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plateau_core::experiment::{exit_code, ExperimentConfig, Overrides};
use plateau_core::Error;

/// Gradient-variance and 2-design experiments from JSON configs
#[derive(Parser, Debug)]
#[command(name = "plateau-scope", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write its CSV outputs
    Run {
        config: PathBuf,
        /// Override the sample count
        #[arg(long)]
        samples: Option<usize>,
        /// Override the master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Write outputs into this directory instead of the configured path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without running it
    Validate { config: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    ExperimentConfig::load(path).map_err(|e| match e {
        // an unreadable config file is a config error
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        other => other,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            samples,
            seed,
            out,
        } => load(config).and_then(|c| {
            let o = Overrides {
                samples: *samples,
                seed: *seed,
                out_dir: out.clone(),
            };
            let files = plateau_core::experiment::run(&c, &o)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }),
        Command::Validate { config } => load(config).and_then(|c| {
            let plan = c.plan(None)?;
            print!("ok: kind={}", c.kind.name());
            if let Some(l) = &plan.layout {
                print!(
                    " n={} layers={} blocks={}",
                    l.n_qubits(),
                    l.layer_count(),
                    l.blocks().len()
                );
            }
            println!(" config_hash={}", plan.config_hash);
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
