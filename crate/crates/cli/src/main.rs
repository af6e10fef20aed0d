//! `qreadout`: reproducible readout-discrimination experiments.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qubit_readout::pipeline::PipelineKind;

#[derive(Parser)]
#[command(name = "qreadout", version, about = "Single-shot qubit readout discrimination experiments")]
struct Cli {
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log level: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Run configuration (TOML), or `builtin:ref3q` for the reference configuration.
    #[arg(long)]
    config: String,

    /// Master seed; overrides the configuration's `seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (models/, reports/, logs/, resolved-config.toml).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a labeled dataset.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Train pipelines on the training split of a dataset.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        /// Pipeline kinds (repeatable); default: the configuration's `eval.kinds`.
        #[arg(long = "kind")]
        kinds: Vec<PipelineKind>,
    },
    /// Evaluate a trained pipeline.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        /// Pipeline bundle directory written by `train`.
        #[arg(long)]
        pipeline: PathBuf,
        /// Readout duration in bins (default: the full trained duration).
        #[arg(long)]
        use_bins: Option<usize>,
        /// Also evaluate the network in fixed point with this many bits.
        #[arg(long)]
        quantize_bits: Option<u32>,
        /// Shots to evaluate.
        #[arg(long, value_enum, default_value = "test")]
        shots: commands::ShotSet,
    },
    /// Evaluate a trained pipeline over a range of readout durations.
    SweepDuration {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        pipeline: PathBuf,
        /// Durations in bins (default: the configuration's `eval.durations`).
        #[arg(long, value_delimiter = ',')]
        durations: Vec<usize>,
        /// Saturation tolerance (default: the configuration's `eval.saturation_epsilon`).
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Train and evaluate one pipeline per training-set size.
    SweepTrainSize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        kind: PipelineKind,
        /// Training-set sizes (default: the configuration's `eval.train_sizes`).
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
    /// Run relaxation labeling on the training split and score it against ground truth.
    LabelRelax {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(commands::EXIT_USAGE);
        }
    }
    let sink = output::LogSink::default();
    let level = cli.log_level.parse().unwrap_or(log::LevelFilter::Info);
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Pipe(Box::new(sink.clone())))
        .init();

    let result = match cli.command {
        Command::Generate { common } => commands::generate(&common, &sink),
        Command::Train { common, dataset, kinds } => commands::train(&common, &sink, &dataset, &kinds),
        Command::Evaluate {
            common,
            dataset,
            pipeline,
            use_bins,
            quantize_bits,
            shots,
        } => commands::evaluate(&common, &sink, &dataset, &pipeline, use_bins, quantize_bits, shots),
        Command::SweepDuration {
            common,
            dataset,
            pipeline,
            durations,
            epsilon,
        } => commands::sweep_duration(&common, &sink, &dataset, &pipeline, &durations, epsilon),
        Command::SweepTrainSize {
            common,
            dataset,
            kind,
            sizes,
        } => commands::sweep_train_size(&common, &sink, &dataset, kind, &sizes),
        Command::LabelRelax { common, dataset } => commands::label_relax(&common, &sink, &dataset),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = commands::exit_code(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
