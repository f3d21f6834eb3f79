use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};
use relnet_cli::config::{load_config, ExperimentConfig, ExperimentKind};
use relnet_cli::{exit, run_experiment, write_report, HarnessError, RunOptions, RunOutcome};

#[derive(Parser)]
#[command(name = "relnet", version, about = "Train and analyze twin-encoder similarity models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every arm of an experiment config and write a run directory.
    Run {
        config: PathBuf,
        /// Replace an existing run of a different config.
        #[arg(long)]
        force: bool,
        /// Use this master seed instead of the config's.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Run directory (default: output_dir, then $RELNET_OUT/<name>, then runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Progress on stderr.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Verify a run's checksums and write its report under <run>/report.
    Report {
        /// Run directory or its manifest.json.
        run: PathBuf,
    },
    /// Check configs without running them; prints every violation.
    Validate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Export the stimuli a config would use, as PGM images and CSV.
    GenStimuli {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default config of an experiment kind.
    Defaults {
        #[arg(value_parser = ["parametric-similarity", "oddball", "categorical"])]
        experiment: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<HarnessError>().map_or(exit::INTERNAL, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run {
            config,
            force,
            seed_override,
            out,
            verbose,
        } => {
            let opts = RunOptions {
                force,
                seed_override,
                out,
                verbose,
            };
            match run_experiment(&config, &opts)? {
                RunOutcome::Completed { dir, .. } => println!("completed {}", dir.display()),
                RunOutcome::Skipped { dir } => println!("up to date {}", dir.display()),
            }
        }
        Command::Report { run } => {
            for path in write_report(&run)? {
                println!("{}", path.display());
            }
        }
        Command::Validate { configs } => {
            let mut failed = None;
            for path in &configs {
                match load_config(path) {
                    Ok(c) => println!("{}: ok ({} \"{}\")", path.display(), c.kind().as_str(), c.name()),
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        failed.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = failed {
                return Err(e.into());
            }
        }
        Command::GenStimuli { config, out } => {
            let cfg = load_config(&config)?;
            let files = relnet_cli::stimuli::generate_stimuli(&cfg, &out)
                .with_context(|| format!("exporting stimuli to {}", out.display()))?;
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Defaults { experiment } => {
            let kind = ExperimentKind::ALL
                .into_iter()
                .find(|k| k.as_str() == experiment)
                .expect("clap restricts the value");
            let value = serde_json::to_value(ExperimentConfig::default_for(kind))?;
            println!("{}", serde_json::to_string_pretty(&value)?);
        }
    }
    Ok(())
}
