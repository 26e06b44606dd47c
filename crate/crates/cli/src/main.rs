use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qrcost::scenario::{run_scenario, RunConfig, BUILTIN_SCENARIOS};

/// Output directory used when neither `--out-dir` nor the environment
/// variable is set.
const DEFAULT_OUT_DIR: &str = "qrcost-out";
const OUT_DIR_ENV: &str = "QRCOST_OUTPUT_DIR";

/// Cost-coefficient sweeps for fiber and vacuum-beam-guide repeater chains.
#[derive(Debug, Parser)]
#[command(name = "qrcost", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file or builtin scenario and write its CSV.
    Run {
        /// Path to a TOML scenario, or a builtin name (see `list-scenarios`).
        config: String,
        /// Output directory; overrides $QRCOST_OUTPUT_DIR.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Suppress the summary table.
        #[arg(long)]
        quiet: bool,
    },
    /// Parse a scenario and print every resolved parameter without running it.
    Validate {
        config: String,
    },
    /// List the builtin scenarios.
    ListScenarios,
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn load(source: &str) -> Result<RunConfig> {
    RunConfig::load_file_or_builtin(source).with_context(|| format!("invalid scenario `{source}`"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            out_dir: flag,
            quiet,
        } => {
            let run = load(&config)?;
            let dir = out_dir(flag);
            let output = run_scenario(&run, &dir)
                .with_context(|| format!("scenario `{}` failed", run.name))?;
            if !quiet {
                print!("{}", output.summary);
            }
            println!("wrote {} ({} rows)", output.csv_path.display(), output.rows.len());
        }
        Command::Validate { config } => {
            let run = load(&config)?;
            print!("{}", run.describe());
            println!("ok: 0 issues");
        }
        Command::ListScenarios => {
            for (name, text) in BUILTIN_SCENARIOS {
                let description = RunConfig::from_toml_str(text)
                    .map(|c| c.description)
                    .unwrap_or_default();
                println!("{name:<6} {description}");
            }
        }
    }
    Ok(())
}
