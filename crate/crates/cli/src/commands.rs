use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use serde::Serialize;

use qubit_readout::config::RunConfig;
use qubit_readout::dataset::{self, DatasetSplit, LabeledDataset, TransitionEvent};
use qubit_readout::metrics::{self, MetricsReport};
use qubit_readout::pipeline::{self, Pipeline, PipelineKind};
use qubit_readout::relaxation::{self, LabelScore, RelaxationLabelReport};
use qubit_readout::trace::Trace;
use qubit_readout::Error;

use crate::output::{LogSink, RunDir, MODELS};
use crate::Common;

pub const EXIT_USAGE: u8 = 2;

const BUILTIN_REFERENCE: &str = "builtin:ref3q";

#[derive(Debug)]
pub struct FileNotFound(pub String);

impl std::fmt::Display for FileNotFound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FileNotFound: {}", self.0)
    }
}

impl std::error::Error for FileNotFound {}

/// Process exit status for an error, distinct per error kind.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<FileNotFound>().is_some() {
            return 4;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 4,
                Error::Io(_) => 5,
                Error::Json(_) => 6,
                Error::InvalidConfig(_) => 7,
                Error::FormatError { .. } | Error::PayloadTruncated { .. } => 8,
                Error::InvalidRatios(_) => 9,
                Error::InsufficientData(_) => 10,
                Error::EmptyTrace | Error::InvalidTrace(_) | Error::LengthMismatch { .. } => 11,
                Error::DegenerateModel(_) | Error::FrequencyCollision { .. } => 12,
                Error::InvalidWindow { .. } => 13,
                Error::DegenerateClasses(_) | Error::DegenerateCentroids(_) => 14,
                Error::InsufficientRelaxations { .. } => 15,
                Error::FeatureShapeError { .. } => 16,
                Error::DivergedTraining { .. } => 17,
                Error::AccumulatorOverflow { .. } => 18,
                Error::UnsupportedTruncation(_) => 19,
                Error::EmptyEvaluation => 20,
            };
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            return if io.kind() == std::io::ErrorKind::NotFound { 4 } else { 5 };
        }
    }
    1
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut config = if common.config == BUILTIN_REFERENCE {
        RunConfig::reference()
    } else {
        let path = Path::new(&common.config);
        if !path.is_file() {
            return Err(FileNotFound(format!("config file `{}` does not exist", path.display())).into());
        }
        RunConfig::load(path).with_context(|| format!("cannot load config {}", path.display()))?
    };
    if let Some(seed) = common.seed {
        config.set_seed(seed);
    }
    config.validate()?;
    Ok(config)
}

fn open_run(common: &Common, sink: &LogSink, command: &str) -> Result<(RunConfig, RunDir)> {
    let config = load_config(common)?;
    let mut run = RunDir::create(&common.out, &config)?;
    sink.attach(run.log_file(command)?);
    info!(
        "{command}: seed {}, config sha256 {}, output {}",
        run.seed,
        run.config_sha256,
        run.root().display()
    );
    Ok((config, run))
}

fn load_dataset(config: &RunConfig, dir: &Path) -> Result<LabeledDataset> {
    if !dir.join(dataset::MANIFEST_FILE).is_file() {
        return Err(FileNotFound(format!("no dataset manifest in `{}`", dir.display())).into());
    }
    let ds = dataset::load_dataset(dir).with_context(|| format!("cannot load dataset {}", dir.display()))?;
    config.check_dataset(&ds)?;
    Ok(ds)
}

fn load_pipeline(dir: &Path) -> Result<Pipeline> {
    if !dir.is_dir() {
        return Err(FileNotFound(format!("pipeline bundle `{}` does not exist", dir.display())).into());
    }
    pipeline::load_pipeline(dir).with_context(|| format!("cannot load pipeline {}", dir.display()))
}

fn split(config: &RunConfig, ds: &LabeledDataset) -> Result<DatasetSplit> {
    Ok(dataset::split_dataset(ds, config.split.ratios, config.seed)?)
}

fn write_csv(run: &mut RunDir, name: &str, reports: &[MetricsReport]) -> Result<()> {
    let mut buf = Vec::new();
    metrics::write_csv(reports, &mut buf)?;
    run.write_bytes(Path::new(crate::output::REPORTS).join(name), &buf)?;
    Ok(())
}

pub fn generate(common: &Common, sink: &LogSink) -> Result<()> {
    let (config, mut run) = open_run(common, sink, "generate")?;
    let ds = qubit_readout::sim::generate(&config.sim, &config.noise_model())?;
    run.track(dataset::MANIFEST_FILE);
    run.track(dataset::PAYLOAD_FILE);
    dataset::save_dataset(&ds, run.root())?;
    run.write_report("dataset.json", "generate", &dataset::describe(&ds))?;
    info!("wrote {} shots of {} bins", ds.num_shots(), ds.bins());
    run.commit();
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    kind: PipelineKind,
    requested_kind: PipelineKind,
    train_shots: usize,
    validation_shots: usize,
    trained_bins: usize,
    notices: &'a [pipeline::Notice],
    training: Option<&'a qubit_readout::neural::TrainingMeta>,
}

pub fn train(common: &Common, sink: &LogSink, dataset_dir: &Path, kinds: &[PipelineKind]) -> Result<()> {
    let (config, mut run) = open_run(common, sink, "train")?;
    let ds = load_dataset(&config, dataset_dir)?;
    let split = split(&config, &ds)?;
    let kinds = if kinds.is_empty() { config.eval.kinds.clone() } else { kinds.to_vec() };
    for kind in kinds {
        info!("training {kind} on {} shots", split.train.len());
        let p = pipeline::fit(kind, &ds, &split, &config.pipeline)?;
        let dir = run.track(Path::new(MODELS).join(kind.as_str()));
        pipeline::save_pipeline(&p, &dir)?;
        let summary = TrainSummary {
            kind: p.kind,
            requested_kind: kind,
            train_shots: split.train.len(),
            validation_shots: split.validation.len(),
            trained_bins: p.trained_bins,
            notices: &p.notices,
            training: p.network.as_ref().map(|n| &n.meta),
        };
        run.write_report(&format!("train-{kind}.json"), "train", &summary)?;
    }
    run.commit();
    Ok(())
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum ShotSet {
    Test,
    Validation,
    Train,
    All,
}

fn shots(set: ShotSet, split: &DatasetSplit, ds: &LabeledDataset) -> Vec<usize> {
    match set {
        ShotSet::Test => split.test.clone(),
        ShotSet::Validation => split.validation.clone(),
        ShotSet::Train => split.train.clone(),
        ShotSet::All => (0..ds.num_shots()).collect(),
    }
}

#[derive(Serialize)]
struct EvaluationOutput {
    report: MetricsReport,
    quantized: Option<QuantizedOutput>,
}

#[derive(Serialize)]
struct QuantizedOutput {
    bits: u32,
    report: MetricsReport,
}

pub fn evaluate(
    common: &Common,
    sink: &LogSink,
    dataset_dir: &Path,
    pipeline_dir: &Path,
    use_bins: Option<usize>,
    quantize_bits: Option<u32>,
    set: ShotSet,
) -> Result<()> {
    let (config, mut run) = open_run(common, sink, "evaluate")?;
    let ds = load_dataset(&config, dataset_dir)?;
    let p = load_pipeline(pipeline_dir)?;
    let split = split(&config, &ds)?;
    let bins = use_bins.unwrap_or(p.trained_bins);
    let shots = shots(set, &split, &ds);
    let report = metrics::evaluate(&p, &ds, &shots, bins)?;
    info!("{}: {} bins, cumulative accuracy {:.6}", p.kind, bins, report.cumulative_accuracy);
    let quantized = match quantize_bits {
        Some(b) if p.network.is_some() => {
            let q = p.quantize_network(&ds, &split.train, b)?;
            let r = metrics::evaluate_quantized(&p, &q, &ds, &shots, bins)?;
            info!("{}: {b}-bit fixed point, cumulative accuracy {:.6}", p.kind, r.cumulative_accuracy);
            Some(QuantizedOutput { bits: b, report: r })
        }
        Some(_) => bail!(Error::InvalidConfig(format!("{} pipelines have no network to quantize", p.kind))),
        None => None,
    };
    let stem = format!("evaluate-{}-{bins}", p.kind);
    write_csv(&mut run, &format!("{stem}.csv"), std::slice::from_ref(&report))?;
    run.write_report(&format!("{stem}.json"), "evaluate", &EvaluationOutput { report, quantized })?;
    run.commit();
    Ok(())
}

pub fn sweep_duration(
    common: &Common,
    sink: &LogSink,
    dataset_dir: &Path,
    pipeline_dir: &Path,
    durations: &[usize],
    epsilon: Option<f64>,
) -> Result<()> {
    let (config, mut run) = open_run(common, sink, "sweep-duration")?;
    let ds = load_dataset(&config, dataset_dir)?;
    let p = load_pipeline(pipeline_dir)?;
    let split = split(&config, &ds)?;
    let durations = if durations.is_empty() {
        config.eval.durations.clone()
    } else {
        durations.to_vec()
    };
    if durations.is_empty() {
        bail!(Error::InvalidConfig("no durations given".into()));
    }
    let eps = epsilon.unwrap_or(config.eval.saturation_epsilon);
    let sweep = metrics::sweep_duration(&p, &ds, &split.test, &durations, eps)?;
    for r in &sweep.rows {
        info!("{} bins: cumulative accuracy {:.6}", r.use_bins, r.cumulative_accuracy);
    }
    info!("saturation at {:?} bins (epsilon {eps})", sweep.saturation_bins);
    let stem = format!("sweep-duration-{}", p.kind);
    write_csv(&mut run, &format!("{stem}.csv"), &sweep.rows)?;
    run.write_report(&format!("{stem}.json"), "sweep-duration", &sweep)?;
    run.commit();
    Ok(())
}

#[derive(Serialize)]
struct TrainSizeSweep {
    kind: PipelineKind,
    rows: Vec<MetricsReport>,
}

pub fn sweep_train_size(
    common: &Common,
    sink: &LogSink,
    dataset_dir: &Path,
    kind: PipelineKind,
    sizes: &[usize],
) -> Result<()> {
    let (config, mut run) = open_run(common, sink, "sweep-train-size")?;
    let ds = load_dataset(&config, dataset_dir)?;
    let split = split(&config, &ds)?;
    let sizes = if sizes.is_empty() {
        config.eval.train_sizes.clone()
    } else {
        sizes.to_vec()
    };
    if sizes.is_empty() {
        bail!(Error::InvalidConfig("no training-set sizes given".into()));
    }
    let rows = metrics::sweep_train_size(kind, &ds, &split, &sizes, config.seed, &config.pipeline)?;
    for r in &rows {
        info!("{:?} training shots: cumulative accuracy {:.6}", r.train_size, r.cumulative_accuracy);
    }
    let stem = format!("sweep-train-size-{kind}");
    write_csv(&mut run, &format!("{stem}.csv"), &rows)?;
    run.write_report(&format!("{stem}.json"), "sweep-train-size", &TrainSizeSweep { kind, rows })?;
    run.commit();
    Ok(())
}

#[derive(Serialize)]
struct QubitLabels {
    qubit: usize,
    /// Dataset shot indices of the labeled relaxation traces.
    relax_shots: Vec<usize>,
    report: Option<RelaxationLabelReport>,
    error: Option<String>,
    score: Option<LabelScore>,
}

pub fn label_relax(common: &Common, sink: &LogSink, dataset_dir: &Path) -> Result<()> {
    let (config, mut run) = open_run(common, sink, "label-relax")?;
    let ds = load_dataset(&config, dataset_dir)?;
    let split = split(&config, &ds)?;
    let demux = match ds.layout() {
        dataset::Layout::Composite { if_freqs_mhz } => Some(pipeline::Demux {
            if_freqs_mhz: if_freqs_mhz.clone(),
            boxcar_len: config.pipeline.demux_boxcar,
        }),
        dataset::Layout::Demultiplexed => None,
    };
    let full = vec![ds.bins(); ds.num_qubits()];
    let per_shot = split
        .train
        .iter()
        .map(|&s| pipeline::qubit_traces(&ds, demux.as_ref(), s, &full))
        .collect::<qubit_readout::Result<Vec<_>>>()?;
    let window = config.eval.relax_window_fraction * config.sim.duration_ns;
    let mut out = Vec::new();
    for q in 0..ds.num_qubits() {
        let mut classes: [Vec<Trace>; 2] = [Vec::new(), Vec::new()];
        let mut excited_shots = Vec::new();
        let mut events: Vec<Option<TransitionEvent>> = Vec::new();
        for (&s, traces) in split.train.iter().zip(&per_shot) {
            let b = usize::from(ds.bit(s, q));
            if b == 1 {
                excited_shots.push(s);
                events.push(ds.event(s, q));
            }
            classes[b].push(traces[q].clone());
        }
        let entry = match relaxation::label_relaxations(&classes[0], &classes[1]) {
            Ok(report) => {
                let score = ds.ground_truth().map(|_| relaxation::score_labels(&report, &events, window));
                if let Some(s) = &score {
                    info!("qubit {q}: {} labeled, recall {:.3}, precision {:.3}", s.labeled, s.recall, s.precision);
                }
                QubitLabels {
                    qubit: q,
                    relax_shots: report.relax_indices.iter().map(|&k| excited_shots[k]).collect(),
                    report: Some(report),
                    error: None,
                    score,
                }
            }
            Err(e @ Error::DegenerateCentroids(_)) => {
                log::warn!("qubit {q}: {e}");
                QubitLabels {
                    qubit: q,
                    relax_shots: Vec::new(),
                    report: None,
                    error: Some(e.to_string()),
                    score: None,
                }
            }
            Err(e) => return Err(e.into()),
        };
        out.push(entry);
    }
    run.write_report("label-relax.json", "label-relax", &serde_json::json!({ "qubits": out }))?;
    run.commit();
    Ok(())
}
