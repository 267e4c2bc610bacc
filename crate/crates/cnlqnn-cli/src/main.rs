//! Command-line entry point. Parses arguments, merges flag overrides into the
//! experiment configuration, sizes the rayon pool, and dispatches to
//! [`cnlqnn_cli::commands`]. Exit codes: 2 for configuration problems, 3 for
//! dataset problems, 4 for missing run artifacts, 1 otherwise.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use cnlqnn_cli::artifacts::CONFIG_FILE;
use cnlqnn_cli::commands::{cmd_ablate, cmd_attack, cmd_noise, cmd_report, cmd_search};
use cnlqnn_cli::config::ExperimentConfig;
use cnlqnn_cli::error::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "cnlqnn",
    version,
    about = "Architecture search for small simulated quantum classifiers with a \
             classical noise layer; evaluates adversarial and gate-noise robustness."
)]
struct Cli {
    /// JSON experiment configuration; defaults fill in missing keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker thread count (default: all cores, or 1 when deterministic).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Single-threaded fixed-order mode: rerunning with the same seed and
    /// configuration reproduces every output file byte for byte.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run architecture search and final training, writing run artifacts.
    Search,
    /// Evaluate white- and black-box attacks on a finished run.
    Attack {
        /// Run directory produced by `search`.
        #[arg(long, value_name = "DIR")]
        run: PathBuf,
    },
    /// Estimate accuracy under simulated gate noise on a finished run.
    Noise {
        /// Run directory produced by `search`.
        #[arg(long, value_name = "DIR")]
        run: PathBuf,
    },
    /// Train twice from one seed (noise layer on, then off) and compare.
    Ablate,
    /// Merge run directories into report.csv and print a summary table.
    Report {
        /// Run directories to merge.
        #[arg(value_name = "RUN", required = true)]
        runs: Vec<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    if cli.deterministic {
        cfg.single_thread_reproducible = true;
    }
    Ok(cfg)
}

/// Builds the global rayon pool. Deterministic mode pins it to one thread so
/// parallel reductions happen in a fixed order.
fn init_threads(cli: &Cli, deterministic: bool) -> Result<()> {
    let threads = if cli.deterministic || deterministic {
        Some(1)
    } else {
        cli.threads
    };
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::config("--threads must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Other(format!("failed to size the thread pool: {e}")))
}

/// Whether the run directory was produced in deterministic mode. Unreadable
/// configs answer `false`; the command itself reports them properly.
fn stored_deterministic(run_dir: &Path) -> bool {
    std::fs::read(run_dir.join(CONFIG_FILE))
        .ok()
        .and_then(|bytes| serde_json::from_slice::<ExperimentConfig>(&bytes).ok())
        .map(|cfg| cfg.single_thread_reproducible)
        .unwrap_or(false)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Search => {
            let cfg = load_config(cli)?;
            init_threads(cli, cfg.single_thread_reproducible)?;
            cmd_search(&cfg)?;
        }
        Command::Attack { run } => {
            init_threads(cli, stored_deterministic(run))?;
            cmd_attack(run)?;
        }
        Command::Noise { run } => {
            init_threads(cli, stored_deterministic(run))?;
            cmd_noise(run)?;
        }
        Command::Ablate => {
            let cfg = load_config(cli)?;
            init_threads(cli, cfg.single_thread_reproducible)?;
            cmd_ablate(&cfg)?;
        }
        Command::Report { runs } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let table = cmd_report(runs, &out)?;
            print!("{table}");
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
