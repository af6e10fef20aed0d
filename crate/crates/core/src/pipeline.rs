//! End-to-end discriminators built from matched filters and small networks.
//!
//! Every pipeline is trained once on full-duration traces. At inference time
//! it accepts any prefix of the readout window: matched-filter outputs are
//! renormalized to the full-duration scale, so thresholds, standardization
//! statistics and network weights are reused unchanged. The raw-trace
//! network has no such mechanism and refuses truncated input.

use std::fs;
use std::path::Path;

use log::{info, warn};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{basis_bit, DatasetSplit, LabeledDataset, Layout};
use crate::dsp::{self, apply_mf, MatchedFilter};
use crate::error::{Error, Result};
use crate::neural::quant::{self, QuantizedModel};
use crate::neural::{self, NetworkModel, NetworkSpec, TrainHyper};
use crate::relaxation::{self, DEFAULT_MIN_RELAX};
use crate::trace::Trace;

pub const BUNDLE_FORMAT: &str = "qreadout-pipeline-1";
const BUNDLE_MANIFEST: &str = "manifest.json";
const FILTERS_FILE: &str = "filters.json";
const RMFS_FILE: &str = "rmfs.json";
const NETWORK_FILE: &str = "network.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    Mf,
    MfNn,
    MfRmfNn,
    RawFnn,
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 4] = [Self::Mf, Self::MfNn, Self::MfRmfNn, Self::RawFnn];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mf => "mf",
            Self::MfNn => "mf_nn",
            Self::MfRmfNn => "mf_rmf_nn",
            Self::RawFnn => "raw_fnn",
        }
    }
}

impl std::fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PipelineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown pipeline kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Boxcar width used when demultiplexing composite traces.
    pub demux_boxcar: usize,
    pub min_relax: usize,
    /// Hidden layer sizes of the raw-trace network.
    pub raw_hidden: [usize; 2],
    /// Decimation factor applied to raw traces before they enter the network.
    pub raw_decimate: usize,
    /// Seeds network initialization and mini-batch order; overrides `train.seed`.
    pub seed: u64,
    pub train: TrainHyper,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            demux_boxcar: 20,
            min_relax: DEFAULT_MIN_RELAX,
            raw_hidden: [250, 64],
            raw_decimate: 1,
            seed: 0,
            train: TrainHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demux {
    pub if_freqs_mhz: Vec<f64>,
    pub boxcar_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "notice", rename_all = "snake_case")]
pub enum Notice {
    /// The qubit contributes a constant zero relaxation feature.
    RmfDisabled { qubit: usize, reason: String },
    /// No qubit had a usable relaxation filter; the pipeline is an `mf_nn`.
    ExplicitDowngrade { from: PipelineKind, to: PipelineKind },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub kind: PipelineKind,
    pub num_qubits: usize,
    pub trained_bins: usize,
    pub dt_ns: f64,
    pub demux: Option<Demux>,
    /// One state filter per qubit; empty for `raw_fnn`.
    pub filters: Vec<MatchedFilter>,
    /// One entry per qubit for `mf_rmf_nn`, empty otherwise.
    pub rmfs: Vec<Option<MatchedFilter>>,
    pub network: Option<NetworkModel>,
    pub raw_decimate: usize,
    pub notices: Vec<Notice>,
}

/// Per-qubit envelopes of one shot, each cut to its own number of bins.
/// Composite traces are cut first and then demultiplexed.
pub fn qubit_traces(ds: &LabeledDataset, demux: Option<&Demux>, shot: usize, use_bins: &[usize]) -> Result<Vec<Trace>> {
    match (ds.layout(), demux) {
        (Layout::Demultiplexed, _) => use_bins
            .iter()
            .enumerate()
            .map(|(q, &b)| ds.trace(shot, q).truncated(b))
            .collect(),
        (Layout::Composite { .. }, Some(d)) => {
            let composite = ds.trace(shot, 0);
            use_bins
                .iter()
                .zip(&d.if_freqs_mhz)
                .map(|(&b, &f)| {
                    let cut = composite.truncated(b)?;
                    dsp::demultiplex(&cut, f, d.boxcar_len.min(b))
                })
                .collect()
        }
        (Layout::Composite { .. }, None) => Err(Error::InvalidConfig(
            "composite dataset given to a pipeline without demultiplexing parameters".into(),
        )),
    }
}

fn check_compatible(p: &Pipeline, ds: &LabeledDataset) -> Result<()> {
    if ds.num_qubits() != p.num_qubits {
        return Err(Error::LengthMismatch {
            expected: p.num_qubits,
            found: ds.num_qubits(),
        });
    }
    if ds.bins() < p.trained_bins {
        return Err(Error::InvalidWindow {
            window: p.trained_bins,
            max: ds.bins(),
        });
    }
    match (ds.layout(), &p.demux) {
        (Layout::Composite { if_freqs_mhz }, Some(d)) if *if_freqs_mhz != d.if_freqs_mhz => Err(Error::InvalidConfig(
            "dataset tones differ from the pipeline's demultiplexing tones".into(),
        )),
        (Layout::Demultiplexed, Some(_)) => Err(Error::InvalidConfig(
            "pipeline expects composite traces, dataset is demultiplexed".into(),
        )),
        (Layout::Composite { .. }, None) => Err(Error::InvalidConfig(
            "pipeline expects demultiplexed traces, dataset is composite".into(),
        )),
        _ => Ok(()),
    }
}

fn raw_features(traces: &[Trace], decimate: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for t in traces {
        let t = if decimate > 1 { dsp::boxcar(t, decimate, true)? } else { t.clone() };
        out.extend_from_slice(t.samples_i());
        out.extend_from_slice(t.samples_q());
    }
    Ok(out)
}

impl Pipeline {
    fn uniform_bins(&self, use_bins: usize) -> Vec<usize> {
        vec![use_bins; self.num_qubits]
    }

    fn check_bins(&self, use_bins: &[usize]) -> Result<()> {
        if use_bins.len() != self.num_qubits {
            return Err(Error::LengthMismatch {
                expected: self.num_qubits,
                found: use_bins.len(),
            });
        }
        for &b in use_bins {
            if b == 0 || b > self.trained_bins {
                return Err(Error::InvalidWindow {
                    window: b,
                    max: self.trained_bins,
                });
            }
        }
        if self.kind == PipelineKind::RawFnn && use_bins.iter().any(|&b| b != self.trained_bins) {
            return Err(Error::UnsupportedTruncation(self.kind.to_string()));
        }
        Ok(())
    }

    /// Matched-filter outputs of one shot: `N` state-filter values, then for
    /// `mf_rmf_nn` `N` relaxation-filter values (zero where disabled).
    fn mf_features(&self, traces: &[Trace], use_bins: &[usize]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(2 * self.num_qubits);
        for ((mf, t), &b) in self.filters.iter().zip(traces).zip(use_bins) {
            out.push(apply_mf(mf, t, b)?);
        }
        for (rmf, (t, &b)) in self.rmfs.iter().zip(traces.iter().zip(use_bins)) {
            out.push(match rmf {
                Some(f) => apply_mf(f, t, b)?,
                None => 0.0,
            });
        }
        Ok(out)
    }

    /// Network input (or, for `mf`, the filter outputs) of one shot.
    pub fn features(&self, ds: &LabeledDataset, shot: usize, use_bins: &[usize]) -> Result<Vec<f64>> {
        self.check_bins(use_bins)?;
        let traces = qubit_traces(ds, self.demux.as_ref(), shot, use_bins)?;
        match self.kind {
            PipelineKind::RawFnn => raw_features(&traces, self.raw_decimate),
            _ => self.mf_features(&traces, use_bins),
        }
    }

    fn feature_matrix(&self, ds: &LabeledDataset, shots: &[usize], use_bins: &[usize]) -> Result<Array2<f64>> {
        let rows: Vec<Vec<f64>> = shots
            .par_iter()
            .map(|&s| self.features(ds, s, use_bins))
            .collect::<Result<_>>()?;
        let width = rows.first().map_or(0, Vec::len);
        Ok(Array2::from_shape_vec((rows.len(), width), rows.concat()).expect("rows share a width"))
    }

    fn decode(&self, state: usize) -> Vec<u8> {
        (0..self.num_qubits).map(|q| basis_bit(state as u32, q)).collect()
    }

    /// Per-qubit bits of one shot using the first `use_bins[q]` bins of qubit `q`.
    pub fn discriminate_per_qubit(&self, ds: &LabeledDataset, shot: usize, use_bins: &[usize]) -> Result<Vec<u8>> {
        let x = self.features(ds, shot, use_bins)?;
        match &self.network {
            None => Ok(self.filters.iter().zip(&x).map(|(mf, &v)| mf.classify(v)).collect()),
            Some(net) => {
                let p = neural::forward(net, &x)?;
                Ok(self.decode(neural::argmax(ndarray::ArrayView1::from(&p[..]))))
            }
        }
    }

    /// Like [`Pipeline::discriminate_per_qubit`] with the network replaced by
    /// its fixed-point form. Threshold pipelines are unaffected.
    pub fn discriminate_quantized(
        &self,
        qmodel: &QuantizedModel,
        ds: &LabeledDataset,
        shot: usize,
        use_bins: &[usize],
    ) -> Result<Vec<u8>> {
        if self.network.is_none() {
            return self.discriminate_per_qubit(ds, shot, use_bins);
        }
        let x = self.features(ds, shot, use_bins)?;
        let p = quant::forward_q(qmodel, &x)?;
        Ok(self.decode(neural::argmax(ndarray::ArrayView1::from(&p[..]))))
    }

    /// Fixed-point copy of the network, calibrated on the features of `shots`.
    pub fn quantize_network(&self, ds: &LabeledDataset, shots: &[usize], bits: u32) -> Result<QuantizedModel> {
        let net = self
            .network
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("{} pipelines have no network", self.kind)))?;
        check_compatible(self, ds)?;
        let x = self.feature_matrix(ds, shots, &self.uniform_bins(self.trained_bins))?;
        quant::quantize(net, bits, x.view())
    }

    pub fn check_dataset(&self, ds: &LabeledDataset) -> Result<()> {
        check_compatible(self, ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_qubits;
        let bad = |what: &str| Err(Error::InvalidConfig(format!("{} pipeline: {what}", self.kind)));
        let uses_filters = self.kind != PipelineKind::RawFnn;
        if uses_filters != (self.filters.len() == n) || (!uses_filters && !self.filters.is_empty()) {
            return bad("state filters inconsistent with kind");
        }
        let wants_rmf = self.kind == PipelineKind::MfRmfNn;
        if wants_rmf != (self.rmfs.len() == n) || (!wants_rmf && !self.rmfs.is_empty()) {
            return bad("relaxation filters inconsistent with kind");
        }
        for f in self.filters.iter().chain(self.rmfs.iter().flatten()) {
            f.validate()?;
            if f.trained_on_bins != self.trained_bins {
                return bad("filters trained on different windows");
            }
        }
        if (self.kind == PipelineKind::Mf) != self.network.is_none() {
            return bad("network presence inconsistent with kind");
        }
        if let Some(net) = &self.network {
            net.validate()?;
            if net.num_outputs() != 1 << n {
                return bad("network output width is not 2^N");
            }
        }
        if self.raw_decimate == 0 {
            return bad("raw_decimate must be >= 1");
        }
        Ok(())
    }
}

/// Bits of one shot at a uniform duration of `use_bins` bins.
pub fn discriminate(p: &Pipeline, ds: &LabeledDataset, shot: usize, use_bins: usize) -> Result<Vec<u8>> {
    p.discriminate_per_qubit(ds, shot, &p.uniform_bins(use_bins))
}

/// Per-qubit traces of `shots` split by the prepared bit of each qubit.
fn class_traces(ds: &LabeledDataset, demux: Option<&Demux>, shots: &[usize]) -> Result<Vec<[Vec<Trace>; 2]>> {
    let n = ds.num_qubits();
    let full = vec![ds.bins(); n];
    let per_shot: Vec<Vec<Trace>> = shots
        .par_iter()
        .map(|&s| qubit_traces(ds, demux, s, &full))
        .collect::<Result<_>>()?;
    let mut classes: Vec<[Vec<Trace>; 2]> = (0..n).map(|_| [Vec::new(), Vec::new()]).collect();
    for (&s, traces) in shots.iter().zip(per_shot) {
        for (q, t) in traces.into_iter().enumerate() {
            classes[q][usize::from(ds.bit(s, q))].push(t);
        }
    }
    Ok(classes)
}

fn check_split(ds: &LabeledDataset, split: &DatasetSplit) -> Result<()> {
    if split.train.is_empty() {
        return Err(Error::InsufficientData("training split is empty".into()));
    }
    if let Some(&bad) = split.train.iter().chain(&split.validation).find(|&&s| s >= ds.num_shots()) {
        return Err(Error::InsufficientData(format!("split refers to shot {bad} beyond the dataset")));
    }
    for q in 0..ds.num_qubits() {
        let ones = split.train.iter().filter(|&&s| ds.bit(s, q) == 1).count();
        let zeros = split.train.len() - ones;
        if zeros < 2 || ones < 2 {
            return Err(Error::InsufficientData(format!(
                "qubit {q}: training split has {zeros} ground and {ones} excited shots, need at least 2 each"
            )));
        }
    }
    Ok(())
}

/// Trains a pipeline of `kind` on the training shots of `split`, using the
/// validation shots for early stopping.
pub fn fit(kind: PipelineKind, ds: &LabeledDataset, split: &DatasetSplit, config: &PipelineConfig) -> Result<Pipeline> {
    check_split(ds, split)?;
    let n = ds.num_qubits();
    let demux = match ds.layout() {
        Layout::Composite { if_freqs_mhz } => {
            if config.demux_boxcar == 0 || config.demux_boxcar > ds.bins() {
                return Err(Error::InvalidWindow {
                    window: config.demux_boxcar,
                    max: ds.bins(),
                });
            }
            Some(Demux {
                if_freqs_mhz: if_freqs_mhz.clone(),
                boxcar_len: config.demux_boxcar,
            })
        }
        Layout::Demultiplexed => None,
    };
    if config.raw_decimate == 0 || config.raw_decimate > ds.bins() {
        return Err(Error::InvalidWindow {
            window: config.raw_decimate,
            max: ds.bins(),
        });
    }
    let mut pipeline = Pipeline {
        kind,
        num_qubits: n,
        trained_bins: ds.bins(),
        dt_ns: ds.dt_ns(),
        demux,
        filters: Vec::new(),
        rmfs: Vec::new(),
        network: None,
        raw_decimate: if kind == PipelineKind::RawFnn { config.raw_decimate } else { 1 },
        notices: Vec::new(),
    };

    let spec = match kind {
        PipelineKind::RawFnn => {
            let per_qubit = ds.bins() / config.raw_decimate;
            NetworkSpec::new(2 * n * per_qubit, config.raw_hidden, 1 << n)?
        }
        _ => {
            let classes = class_traces(ds, pipeline.demux.as_ref(), &split.train)?;
            pipeline.filters = classes
                .iter()
                .map(|[c0, c1]| dsp::train_mf(c0, c1))
                .collect::<Result<_>>()?;
            if kind == PipelineKind::Mf {
                return Ok(pipeline);
            }
            if kind == PipelineKind::MfRmfNn {
                pipeline.rmfs = fit_rmfs(&classes, config.min_relax, &mut pipeline.notices);
                if pipeline.rmfs.iter().all(Option::is_none) {
                    warn!("no qubit has a usable relaxation filter; falling back to mf_nn");
                    pipeline.kind = PipelineKind::MfNn;
                    pipeline.rmfs.clear();
                    pipeline.notices.push(Notice::ExplicitDowngrade {
                        from: PipelineKind::MfRmfNn,
                        to: PipelineKind::MfNn,
                    });
                }
            }
            if pipeline.kind == PipelineKind::MfRmfNn {
                NetworkSpec::mf_rmf_nn(n)?
            } else {
                NetworkSpec::mf_nn(n)?
            }
        }
    };

    let full = pipeline.uniform_bins(ds.bins());
    let train_x = pipeline.feature_matrix(ds, &split.train, &full)?;
    let val_x = pipeline.feature_matrix(ds, &split.validation, &full)?;
    let val_x = if split.validation.is_empty() {
        Array2::zeros((0, spec.input_size))
    } else {
        val_x
    };
    let labels = |shots: &[usize]| shots.iter().map(|&s| ds.label(s) as usize).collect::<Vec<_>>();
    let hyper = TrainHyper {
        seed: config.seed,
        ..config.train
    };
    let initial = neural::build(spec, config.seed)?;
    let trained = neural::train(
        &initial,
        train_x.view(),
        &labels(&split.train),
        val_x.view(),
        &labels(&split.validation),
        &hyper,
    )?;
    info!(
        "{}: trained {} epochs, best epoch {}, validation loss {:?}",
        pipeline.kind, trained.meta.epochs_run, trained.meta.best_epoch, trained.meta.final_validation_loss
    );
    pipeline.network = Some(trained);
    Ok(pipeline)
}

fn fit_rmfs(classes: &[[Vec<Trace>; 2]], min_relax: usize, notices: &mut Vec<Notice>) -> Vec<Option<MatchedFilter>> {
    classes
        .iter()
        .enumerate()
        .map(|(q, [c0, c1])| {
            let rmf = relaxation::label_relaxations(c0, c1).and_then(|r| relaxation::train_rmf(c0, c1, &r, min_relax));
            match rmf {
                Ok(f) => Some(f),
                Err(e) => {
                    warn!("qubit {q}: relaxation filter disabled: {e}");
                    notices.push(Notice::RmfDisabled {
                        qubit: q,
                        reason: e.to_string(),
                    });
                    None
                }
            }
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct BundleManifest {
    format: String,
    kind: PipelineKind,
    num_qubits: usize,
    trained_bins: usize,
    dt_ns: f64,
    demux: Option<Demux>,
    raw_decimate: usize,
    notices: Vec<Notice>,
    filters: Option<String>,
    rmfs: Option<String>,
    network: Option<String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(value)?)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Writes the pipeline as a directory of JSON files.
pub fn save_pipeline(p: &Pipeline, dir: &Path) -> Result<()> {
    p.validate()?;
    fs::create_dir_all(dir)?;
    let has_filters = !p.filters.is_empty();
    let has_rmfs = !p.rmfs.is_empty();
    let manifest = BundleManifest {
        format: BUNDLE_FORMAT.into(),
        kind: p.kind,
        num_qubits: p.num_qubits,
        trained_bins: p.trained_bins,
        dt_ns: p.dt_ns,
        demux: p.demux.clone(),
        raw_decimate: p.raw_decimate,
        notices: p.notices.clone(),
        filters: has_filters.then(|| FILTERS_FILE.to_string()),
        rmfs: has_rmfs.then(|| RMFS_FILE.to_string()),
        network: p.network.as_ref().map(|_| NETWORK_FILE.to_string()),
    };
    if has_filters {
        write_json(&dir.join(FILTERS_FILE), &p.filters)?;
    }
    if has_rmfs {
        write_json(&dir.join(RMFS_FILE), &p.rmfs)?;
    }
    if let Some(net) = &p.network {
        write_json(&dir.join(NETWORK_FILE), net)?;
    }
    write_json(&dir.join(BUNDLE_MANIFEST), &manifest)
}

pub fn load_pipeline(dir: &Path) -> Result<Pipeline> {
    let m: BundleManifest = read_json(&dir.join(BUNDLE_MANIFEST))?;
    if m.format != BUNDLE_FORMAT {
        return Err(Error::InvalidConfig(format!("unsupported pipeline bundle format `{}`", m.format)));
    }
    let component = |name: &Option<String>| -> Option<std::path::PathBuf> { name.as_ref().map(|f| dir.join(f)) };
    let p = Pipeline {
        kind: m.kind,
        num_qubits: m.num_qubits,
        trained_bins: m.trained_bins,
        dt_ns: m.dt_ns,
        demux: m.demux,
        filters: component(&m.filters).map(|f| read_json(&f)).transpose()?.unwrap_or_default(),
        rmfs: component(&m.rmfs).map(|f| read_json(&f)).transpose()?.unwrap_or_default(),
        network: component(&m.network).map(|f| read_json(&f)).transpose()?,
        raw_decimate: m.raw_decimate,
        notices: m.notices,
    };
    p.validate()?;
    Ok(p)
}
