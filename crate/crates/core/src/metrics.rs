//! Assignment accuracy, confusion counts and the duration / training-size sweeps.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetSplit, LabeledDataset};
use crate::error::{Error, Result};
use crate::neural::quant::QuantizedModel;
use crate::pipeline::{self, Pipeline, PipelineConfig, PipelineKind};
use crate::rng;

pub const DEFAULT_SATURATION_EPSILON: f64 = 0.005;

const TRAIN_SIZE_STREAM: u64 = 0x0054_5241_494e;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitMetrics {
    pub qubit: usize,
    pub use_bins: usize,
    pub accuracy: f64,
    pub prepared_0: usize,
    pub misclassified_0: usize,
    pub prepared_1: usize,
    pub misclassified_1: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kind: PipelineKind,
    /// Longest per-qubit duration used.
    pub use_bins: usize,
    /// Training shots, set by the training-size sweep.
    pub train_size: Option<usize>,
    pub shots: usize,
    pub cumulative_accuracy: f64,
    pub qubits: Vec<QubitMetrics>,
}

impl MetricsReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.qubits.iter().map(|q| q.accuracy).collect()
    }
}

/// Geometric mean of per-qubit accuracies.
pub fn cumulative_accuracy(per_qubit: &[f64]) -> f64 {
    if per_qubit.is_empty() {
        return f64::NAN;
    }
    if per_qubit.contains(&0.0) {
        return 0.0;
    }
    let mean_log = per_qubit.iter().map(|f| f.ln()).sum::<f64>() / per_qubit.len() as f64;
    mean_log.exp()
}

/// Builds a report from prepared and predicted bits, one row per shot.
pub fn report_from_predictions(
    kind: PipelineKind,
    use_bins: &[usize],
    prepared: &[Vec<u8>],
    predicted: &[Vec<u8>],
) -> Result<MetricsReport> {
    if prepared.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let n = use_bins.len();
    let mut qubits: Vec<QubitMetrics> = (0..n)
        .map(|q| QubitMetrics {
            qubit: q,
            use_bins: use_bins[q],
            accuracy: 0.0,
            prepared_0: 0,
            misclassified_0: 0,
            prepared_1: 0,
            misclassified_1: 0,
        })
        .collect();
    for (want, got) in prepared.iter().zip(predicted) {
        for (m, (&w, &g)) in qubits.iter_mut().zip(want.iter().zip(got)) {
            let wrong = usize::from(w != g);
            if w == 0 {
                m.prepared_0 += 1;
                m.misclassified_0 += wrong;
            } else {
                m.prepared_1 += 1;
                m.misclassified_1 += wrong;
            }
        }
    }
    let shots = prepared.len();
    for m in &mut qubits {
        m.accuracy = (shots - m.misclassified_0 - m.misclassified_1) as f64 / shots as f64;
    }
    let cumulative = cumulative_accuracy(&qubits.iter().map(|q| q.accuracy).collect::<Vec<_>>());
    Ok(MetricsReport {
        kind,
        use_bins: use_bins.iter().copied().max().unwrap_or(0),
        train_size: None,
        shots,
        cumulative_accuracy: cumulative,
        qubits,
    })
}

fn prepared_bits(ds: &LabeledDataset, shots: &[usize]) -> Vec<Vec<u8>> {
    shots
        .iter()
        .map(|&s| (0..ds.num_qubits()).map(|q| ds.bit(s, q)).collect())
        .collect()
}

/// Evaluates `p` on `shots` of `ds` with per-qubit durations.
pub fn evaluate_per_qubit(p: &Pipeline, ds: &LabeledDataset, shots: &[usize], use_bins: &[usize]) -> Result<MetricsReport> {
    if shots.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    p.check_dataset(ds)?;
    let predicted: Vec<Vec<u8>> = shots
        .par_iter()
        .map(|&s| p.discriminate_per_qubit(ds, s, use_bins))
        .collect::<Result<_>>()?;
    report_from_predictions(p.kind, use_bins, &prepared_bits(ds, shots), &predicted)
}

/// Evaluates `p` on `shots` of `ds` using the first `use_bins` bins of every qubit.
pub fn evaluate(p: &Pipeline, ds: &LabeledDataset, shots: &[usize], use_bins: usize) -> Result<MetricsReport> {
    evaluate_per_qubit(p, ds, shots, &vec![use_bins; p.num_qubits])
}

/// Evaluates `p` with its network replaced by the fixed-point model `qmodel`.
pub fn evaluate_quantized(
    p: &Pipeline,
    qmodel: &QuantizedModel,
    ds: &LabeledDataset,
    shots: &[usize],
    use_bins: usize,
) -> Result<MetricsReport> {
    if shots.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    p.check_dataset(ds)?;
    let bins = vec![use_bins; p.num_qubits];
    let predicted: Vec<Vec<u8>> = shots
        .par_iter()
        .map(|&s| p.discriminate_quantized(qmodel, ds, s, &bins))
        .collect::<Result<_>>()?;
    report_from_predictions(p.kind, &bins, &prepared_bits(ds, shots), &predicted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationSweep {
    pub epsilon: f64,
    pub full_bins: usize,
    pub full_accuracy: f64,
    /// Shortest swept duration whose cumulative accuracy is at least
    /// `full_accuracy - epsilon`.
    pub saturation_bins: Option<usize>,
    pub rows: Vec<MetricsReport>,
}

/// Evaluates `p` at each duration in `durations` without retraining.
pub fn sweep_duration(
    p: &Pipeline,
    ds: &LabeledDataset,
    shots: &[usize],
    durations: &[usize],
    epsilon: f64,
) -> Result<DurationSweep> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidConfig(format!("saturation epsilon {epsilon} must be >= 0")));
    }
    let rows = durations
        .iter()
        .map(|&b| evaluate(p, ds, shots, b))
        .collect::<Result<Vec<_>>>()?;
    let full_accuracy = match rows.iter().find(|r| r.use_bins == p.trained_bins) {
        Some(r) => r.cumulative_accuracy,
        None => evaluate(p, ds, shots, p.trained_bins)?.cumulative_accuracy,
    };
    let saturation_bins = rows
        .iter()
        .filter(|r| r.cumulative_accuracy >= full_accuracy - epsilon)
        .map(|r| r.use_bins)
        .min();
    Ok(DurationSweep {
        epsilon,
        full_bins: p.trained_bins,
        full_accuracy,
        saturation_bins,
        rows,
    })
}

/// Training subset of `size` shots. The full training set is used as is;
/// smaller subsets are the first `size` shots of a seeded reshuffle.
pub fn train_subset(train: &[usize], size: usize, seed: u64) -> Result<Vec<usize>> {
    if size > train.len() {
        return Err(Error::InsufficientData(format!(
            "requested {size} training shots, split has {}",
            train.len()
        )));
    }
    if size == train.len() {
        return Ok(train.to_vec());
    }
    let mut shuffled = train.to_vec();
    rng::stream(seed, &[TRAIN_SIZE_STREAM, size as u64]).shuffle(&mut shuffled);
    shuffled.truncate(size);
    shuffled.sort_unstable();
    Ok(shuffled)
}

/// Trains one pipeline per training-set size and evaluates each on the test
/// shots at full duration.
pub fn sweep_train_size(
    kind: PipelineKind,
    ds: &LabeledDataset,
    split: &DatasetSplit,
    sizes: &[usize],
    seed: u64,
    config: &PipelineConfig,
) -> Result<Vec<MetricsReport>> {
    sizes
        .iter()
        .map(|&size| {
            let sub = DatasetSplit {
                train: train_subset(&split.train, size, seed)?,
                ..split.clone()
            };
            let p = pipeline::fit(kind, ds, &sub, config)?;
            let mut report = evaluate(&p, ds, &split.test, p.trained_bins)?;
            report.train_size = Some(size);
            Ok(report)
        })
        .collect()
}

/// Area under the ROC curve of scores separating `positive` from `negative`
/// (Mann-Whitney statistic, ties count one half).
pub fn auc(negative: &[f64], positive: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = negative
        .iter()
        .map(|&v| (v, false))
        .chain(positive.iter().map(|&v| (v, true)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < all.len() {
        let mut end = k;
        while end + 1 < all.len() && all[end + 1].0 == all[k].0 {
            end += 1;
        }
        let mid_rank = (k + end) as f64 / 2.0 + 1.0;
        rank_sum += all[k..=end].iter().filter(|x| x.1).count() as f64 * mid_rank;
        k = end + 1;
    }
    let (np, nn) = (positive.len() as f64, negative.len() as f64);
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

pub const CSV_HEADER: [&str; 11] = [
    "kind",
    "bins",
    "train_size",
    "shots",
    "qubit",
    "qubit_bins",
    "accuracy",
    "prepared_0",
    "misclassified_0",
    "prepared_1",
    "misclassified_1",
];

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    kind: PipelineKind,
    bins: usize,
    train_size: Option<usize>,
    shots: usize,
    qubit: usize,
    qubit_bins: usize,
    accuracy: String,
    prepared_0: usize,
    misclassified_0: usize,
    prepared_1: usize,
    misclassified_1: usize,
}

/// Seventeen significant digits, enough for an exact round trip.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes one row per report and qubit. The cumulative accuracy is not a
/// column; it is recomputed from the per-qubit accuracies on reading.
pub fn write_csv<W: Write>(reports: &[MetricsReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        for q in &r.qubits {
            w.serialize(CsvRow {
                kind: r.kind,
                bins: r.use_bins,
                train_size: r.train_size,
                shots: r.shots,
                qubit: q.qubit,
                qubit_bins: q.use_bins,
                accuracy: fmt_f64(q.accuracy),
                prepared_0: q.prepared_0,
                misclassified_0: q.misclassified_0,
                prepared_1: q.prepared_1,
                misclassified_1: q.misclassified_1,
            })
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::format("csv", e.to_string())
}

/// Parses reports written by [`write_csv`]; consecutive rows with qubit 0
/// start a new report.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricsReport>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::format("csv", format!("unexpected header {headers:?}")));
    }
    let mut reports: Vec<MetricsReport> = Vec::new();
    for row in rd.deserialize::<CsvRow>() {
        let row = row.map_err(csv_error)?;
        let accuracy: f64 = row
            .accuracy
            .parse()
            .map_err(|_| Error::format("accuracy", format!("not a number: {}", row.accuracy)))?;
        let q = QubitMetrics {
            qubit: row.qubit,
            use_bins: row.qubit_bins,
            accuracy,
            prepared_0: row.prepared_0,
            misclassified_0: row.misclassified_0,
            prepared_1: row.prepared_1,
            misclassified_1: row.misclassified_1,
        };
        if row.qubit == 0 || reports.is_empty() {
            reports.push(MetricsReport {
                kind: row.kind,
                use_bins: row.bins,
                train_size: row.train_size,
                shots: row.shots,
                cumulative_accuracy: 0.0,
                qubits: Vec::new(),
            });
        }
        reports.last_mut().unwrap().qubits.push(q);
    }
    for r in &mut reports {
        r.cumulative_accuracy = cumulative_accuracy(&r.accuracies());
    }
    Ok(reports)
}
