mod commands;
mod selftest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qnn_core::data::DatasetTag;
use qnn_core::tn::Backend;

/// Layered quantum neural network: data generation, training, trajectories
/// and evaluation.
#[derive(Parser)]
#[command(name = "qnn", version)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct RunArgs {
    /// Named preset: dataset-i, dataset-ii or reduced-i.
    #[arg(long, default_value = "dataset-i")]
    pub preset: String,
    /// JSON configuration file (replaces the preset).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a configuration field, e.g. `--set network.sites=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub backend: Option<Backend>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Part {
    Train,
    Validation,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset and its split manifest.
    GenData {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        dataset: Option<DatasetTag>,
        /// Number of samples; one sixth becomes the validation split.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Train the network parameters.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Dataset file (generated from the configuration otherwise).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Continue from the latest checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Record per-layer magnetizations of validation states.
    Trajectory {
        #[command(flatten)]
        run: RunArgs,
        /// Parameter file (the preset's initial parameters otherwise).
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Maximum number of states.
        #[arg(long, default_value_t = 20)]
        limit: usize,
        /// Also write this many x-basis shots per output state.
        #[arg(long)]
        export_shots: Option<usize>,
    },
    /// Classify states by nearest class centroid.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Which split to classify.
        #[arg(long, value_enum, default_value = "validation")]
        on: Part,
        /// Exit with code 3 below this accuracy.
        #[arg(long, default_value_t = 0.0)]
        min_accuracy: f64,
    },
    /// Run the quick oracle-equivalence and invariant checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_target(false).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::GenData { run, dataset, count } => commands::gen_data(&run, dataset, count),
        Command::Train { run, data, split, resume } => commands::train(&run, data.as_deref(), split.as_deref(), resume),
        Command::Trajectory {
            run,
            params,
            data,
            split,
            limit,
            export_shots,
        } => commands::trajectory(&run, params.as_deref(), data.as_deref(), split.as_deref(), limit, export_shots),
        Command::Evaluate {
            run,
            params,
            data,
            split,
            on,
            min_accuracy,
        } => commands::evaluate(&run, &params, data.as_deref(), split.as_deref(), on, min_accuracy),
        Command::Selftest { seed } => selftest::run(seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
