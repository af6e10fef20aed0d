//! Labeled multi-qubit readout datasets, stratified splitting and the
//! `rdfmt-1` on-disk format.
//!
//! # On-disk layout
//!
//! A dataset is a directory holding two files:
//!
//! * `manifest.json` with the fields
//!   `format` (always `"rdfmt-1"`), `num_qubits`, `dt_ns`, `bins`, `shots`,
//!   `layout` (`{"kind": "demultiplexed"}` or
//!   `{"kind": "composite", "if_freqs_mhz": [..]}`), `traces_per_shot`,
//!   `sample_encoding` (`"f32le"`), `sample_order`
//!   (`"shot,trace,channel,time"`), `payload` (file name of the blob),
//!   `payload_bytes`, `labels` (prepared basis state per shot) and
//!   `ground_truth` (`null`, or per shot a per-qubit list of `null` /
//!   `{"kind": "relaxation" | "excitation", "time_ns": t}`).
//! * the payload blob: little-endian IEEE-754 binary32 samples in shot-major,
//!   trace-major (qubit order, or the single composite trace), channel-major
//!   (I then Q), time-minor order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::rng;
use crate::trace::Trace;

pub const FORMAT_TAG: &str = "rdfmt-1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PAYLOAD_FILE: &str = "samples.bin";
const SAMPLE_ORDER: &str = "shot,trace,channel,time";
const SAMPLE_ENCODING: &str = "f32le";

/// Stream key for split shuffles.
const SPLIT_STREAM: u64 = 0x0053_504c_4954;

/// Bit of `qubit` (0-based) in a basis-state index; qubit 0 is least significant.
pub fn basis_bit(state: u32, qubit: usize) -> u8 {
    ((state >> qubit) & 1) as u8
}

/// Inverse of [`basis_bit`].
pub fn encode_basis_state(bits: &[u8]) -> u32 {
    bits.iter()
        .enumerate()
        .fold(0u32, |acc, (k, &b)| acc | (u32::from(b & 1) << k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    /// One trace per qubit per shot.
    Demultiplexed,
    /// One frequency-multiplexed trace per shot.
    Composite { if_freqs_mhz: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    /// 1 -> 0 during readout.
    Relaxation,
    /// 0 -> 1 during readout.
    Excitation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub kind: TransitionKind,
    pub time_ns: f64,
}

pub type GroundTruth = Vec<Vec<Option<TransitionEvent>>>;

/// Shots of an `N`-qubit register, each labeled with its prepared basis state.
///
/// Samples are held as `f32` exactly as they are stored on disk; accessors
/// hand out `f64` [`Trace`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    num_qubits: usize,
    dt_ns: f64,
    bins: usize,
    layout: Layout,
    labels: Vec<u32>,
    samples: Vec<f32>,
    ground_truth: Option<GroundTruth>,
}

impl LabeledDataset {
    pub fn from_parts(
        num_qubits: usize,
        dt_ns: f64,
        bins: usize,
        layout: Layout,
        labels: Vec<u32>,
        samples: Vec<f32>,
        ground_truth: Option<GroundTruth>,
    ) -> Result<Self> {
        if num_qubits == 0 || num_qubits > 16 {
            return Err(Error::format("num_qubits", format!("must be in 1..=16, got {num_qubits}")));
        }
        if !(dt_ns > 0.0 && dt_ns.is_finite()) {
            return Err(Error::format("dt_ns", format!("must be positive, got {dt_ns}")));
        }
        if bins == 0 {
            return Err(Error::format("bins", "must be positive"));
        }
        if let Layout::Composite { if_freqs_mhz } = &layout {
            if if_freqs_mhz.len() != num_qubits {
                return Err(Error::format(
                    "layout",
                    format!("{} IF frequencies for {num_qubits} qubits", if_freqs_mhz.len()),
                ));
            }
        }
        let states = 1u32 << num_qubits;
        if let Some(bad) = labels.iter().find(|&&s| s >= states) {
            return Err(Error::format("labels", format!("basis state {bad} >= 2^{num_qubits}")));
        }
        let per_shot = Self::traces_for(&layout, num_qubits) * 2 * bins;
        if samples.len() != labels.len() * per_shot {
            return Err(Error::LengthMismatch {
                expected: labels.len() * per_shot,
                found: samples.len(),
            });
        }
        if let Some(gt) = &ground_truth {
            if gt.len() != labels.len() || gt.iter().any(|row| row.len() != num_qubits) {
                return Err(Error::format("ground_truth", "must hold one entry per shot and qubit"));
            }
        }
        Ok(Self {
            num_qubits,
            dt_ns,
            bins,
            layout,
            labels,
            samples,
            ground_truth,
        })
    }

    fn traces_for(layout: &Layout, num_qubits: usize) -> usize {
        match layout {
            Layout::Demultiplexed => num_qubits,
            Layout::Composite { .. } => 1,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_states(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn dt_ns(&self) -> f64 {
        self.dt_ns
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn num_shots(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn traces_per_shot(&self) -> usize {
        Self::traces_for(&self.layout, self.num_qubits)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, shot: usize) -> u32 {
        self.labels[shot]
    }

    /// Prepared bit of `qubit` in `shot`.
    pub fn bit(&self, shot: usize, qubit: usize) -> u8 {
        basis_bit(self.labels[shot], qubit)
    }

    pub fn raw_samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn ground_truth(&self) -> Option<&GroundTruth> {
        self.ground_truth.as_ref()
    }

    pub fn event(&self, shot: usize, qubit: usize) -> Option<TransitionEvent> {
        self.ground_truth.as_ref().and_then(|gt| gt[shot][qubit])
    }

    /// Trace `index` of `shot` (a qubit index for demultiplexed data, 0 for composite).
    pub fn trace(&self, shot: usize, index: usize) -> Trace {
        assert!(index < self.traces_per_shot(), "trace index {index} out of range");
        let start = (shot * self.traces_per_shot() + index) * 2 * self.bins;
        let i = self.samples[start..start + self.bins].iter().map(|&x| f64::from(x)).collect();
        let q = self.samples[start + self.bins..start + 2 * self.bins]
            .iter()
            .map(|&x| f64::from(x))
            .collect();
        Trace::new(i, q, self.dt_ns).expect("dataset traces are validated on construction")
    }

    /// Shot indices grouped by prepared basis state.
    pub fn shots_by_state(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_states()];
        for (shot, &s) in self.labels.iter().enumerate() {
            groups[s as usize].push(shot);
        }
        groups
    }

    /// A new dataset holding `shots` in the given order.
    pub fn select(&self, shots: &[usize]) -> Self {
        let per_shot = self.traces_per_shot() * 2 * self.bins;
        let mut samples = Vec::with_capacity(shots.len() * per_shot);
        for &s in shots {
            samples.extend_from_slice(&self.samples[s * per_shot..(s + 1) * per_shot]);
        }
        Self {
            num_qubits: self.num_qubits,
            dt_ns: self.dt_ns,
            bins: self.bins,
            layout: self.layout.clone(),
            labels: shots.iter().map(|&s| self.labels[s]).collect(),
            samples,
            ground_truth: self
                .ground_truth
                .as_ref()
                .map(|gt| shots.iter().map(|&s| gt[s].clone()).collect()),
        }
    }
}

/// Incrementally assembles a dataset from `f64` traces, rounding samples to `f32`.
#[derive(Debug)]
pub struct DatasetBuilder {
    num_qubits: usize,
    dt_ns: f64,
    bins: usize,
    layout: Layout,
    labels: Vec<u32>,
    samples: Vec<f32>,
    ground_truth: Option<GroundTruth>,
}

impl DatasetBuilder {
    pub fn new(num_qubits: usize, dt_ns: f64, bins: usize, layout: Layout, with_ground_truth: bool) -> Self {
        Self {
            num_qubits,
            dt_ns,
            bins,
            layout,
            labels: Vec::new(),
            samples: Vec::new(),
            ground_truth: with_ground_truth.then(Vec::new),
        }
    }

    pub fn push_shot(
        &mut self,
        state: u32,
        traces: &[Trace],
        events: Option<Vec<Option<TransitionEvent>>>,
    ) -> Result<()> {
        let expected = LabeledDataset::traces_for(&self.layout, self.num_qubits);
        if traces.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: traces.len(),
            });
        }
        for tr in traces {
            if tr.len() != self.bins {
                return Err(Error::LengthMismatch {
                    expected: self.bins,
                    found: tr.len(),
                });
            }
            self.samples.extend(tr.samples_i().iter().map(|&x| x as f32));
            self.samples.extend(tr.samples_q().iter().map(|&x| x as f32));
        }
        self.labels.push(state);
        match (&mut self.ground_truth, events) {
            (Some(gt), Some(ev)) => gt.push(ev),
            (Some(gt), None) => gt.push(vec![None; self.num_qubits]),
            (None, _) => {}
        }
        Ok(())
    }

    pub fn finish(self) -> Result<LabeledDataset> {
        LabeledDataset::from_parts(
            self.num_qubits,
            self.dt_ns,
            self.bins,
            self.layout,
            self.labels,
            self.samples,
            self.ground_truth,
        )
    }
}

/// Disjoint train / validation / test shot indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    /// `[train, validation, test]` counts for each basis state.
    pub per_state_counts: Vec<[usize; 3]>,
}

/// Largest-remainder apportionment of `n` items over `ratios`.
///
/// Ties in the fractional parts go to the earlier ratio.
pub fn largest_remainder(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let raw: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, r) in counts.iter_mut().zip(&raw) {
        *c = r.floor() as usize;
    }
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Stratified split: shots of each basis state are shuffled with their own
/// stream and apportioned by [`largest_remainder`].
pub fn split_dataset(ds: &LabeledDataset, ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !(*r > 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRatios(ratios));
    }
    let groups = ds.shots_by_state();
    if groups.iter().all(Vec::is_empty) {
        return Err(Error::InsufficientData("dataset has no shots".into()));
    }
    let mut split = DatasetSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        per_state_counts: Vec::with_capacity(groups.len()),
    };
    for (state, mut shots) in groups.into_iter().enumerate() {
        if !shots.is_empty() && shots.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "basis state {state} has {} shots, need at least 3",
                shots.len()
            )));
        }
        rng::stream(seed, &[SPLIT_STREAM, state as u64]).shuffle(&mut shots);
        let counts = largest_remainder(shots.len(), &ratios);
        let (train, rest) = shots.split_at(counts[0]);
        let (val, test) = rest.split_at(counts[1]);
        split.train.extend_from_slice(train);
        split.validation.extend_from_slice(val);
        split.test.extend_from_slice(test);
        split.per_state_counts.push(counts);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[derive(Serialize)]
struct ManifestOut<'a> {
    format: &'a str,
    num_qubits: usize,
    dt_ns: f64,
    bins: usize,
    shots: usize,
    layout: &'a Layout,
    traces_per_shot: usize,
    sample_encoding: &'a str,
    sample_order: &'a str,
    payload: &'a str,
    payload_bytes: u64,
    labels: &'a [u32],
    ground_truth: &'a Option<GroundTruth>,
}

/// Writes `ds` into directory `dir` (created if missing).
pub fn save_dataset(ds: &LabeledDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = ManifestOut {
        format: FORMAT_TAG,
        num_qubits: ds.num_qubits,
        dt_ns: ds.dt_ns,
        bins: ds.bins,
        shots: ds.num_shots(),
        layout: &ds.layout,
        traces_per_shot: ds.traces_per_shot(),
        sample_encoding: SAMPLE_ENCODING,
        sample_order: SAMPLE_ORDER,
        payload: PAYLOAD_FILE,
        payload_bytes: ds.samples.len() as u64 * 4,
        labels: &ds.labels,
        ground_truth: &ds.ground_truth,
    };
    let mut out = BufWriter::new(fs::File::create(dir.join(MANIFEST_FILE))?);
    serde_json::to_writer(&mut out, &manifest)?;
    out.write_all(b"\n")?;
    out.flush()?;

    let mut blob = BufWriter::new(fs::File::create(dir.join(PAYLOAD_FILE))?);
    for x in &ds.samples {
        blob.write_all(&x.to_le_bytes())?;
    }
    blob.flush()?;
    Ok(())
}

fn take<T: serde::de::DeserializeOwned>(obj: &Map<String, Value>, field: &str) -> Result<T> {
    let v = obj
        .get(field)
        .ok_or_else(|| Error::format(field, "missing"))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::format(field, e.to_string()))
}

fn expect_str(obj: &Map<String, Value>, field: &str, expected: &str) -> Result<()> {
    let got: String = take(obj, field)?;
    if got != expected {
        return Err(Error::format(field, format!("expected {expected:?}, got {got:?}")));
    }
    Ok(())
}

/// Reads a dataset directory written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<LabeledDataset> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::format("<manifest>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::format("<manifest>", "not a JSON object"))?;

    expect_str(obj, "format", FORMAT_TAG)?;
    expect_str(obj, "sample_encoding", SAMPLE_ENCODING)?;
    expect_str(obj, "sample_order", SAMPLE_ORDER)?;
    let num_qubits: usize = take(obj, "num_qubits")?;
    if num_qubits == 0 || num_qubits > 16 {
        return Err(Error::format("num_qubits", format!("must be in 1..=16, got {num_qubits}")));
    }
    let dt_ns: f64 = take(obj, "dt_ns")?;
    let bins: usize = take(obj, "bins")?;
    let shots: usize = take(obj, "shots")?;
    let layout: Layout = take(obj, "layout")?;
    let traces_per_shot: usize = take(obj, "traces_per_shot")?;
    if traces_per_shot != LabeledDataset::traces_for(&layout, num_qubits) {
        return Err(Error::format("traces_per_shot", "inconsistent with layout"));
    }
    let labels: Vec<u32> = take(obj, "labels")?;
    if labels.len() != shots {
        return Err(Error::format("labels", format!("{} labels for {shots} shots", labels.len())));
    }
    let ground_truth: Option<GroundTruth> = take(obj, "ground_truth")?;
    let payload: String = take(obj, "payload")?;
    if payload.contains('/') || payload.contains('\\') {
        return Err(Error::format("payload", "must be a bare file name"));
    }
    let payload_bytes: u64 = take(obj, "payload_bytes")?;
    let expected = (shots * traces_per_shot * 2 * bins) as u64 * 4;
    if payload_bytes != expected {
        return Err(Error::format(
            "payload_bytes",
            format!("manifest says {payload_bytes}, layout implies {expected}"),
        ));
    }

    let bytes = fs::read(dir.join(&payload))?;
    if (bytes.len() as u64) < expected {
        return Err(Error::PayloadTruncated {
            expected,
            found: bytes.len() as u64,
        });
    }
    if bytes.len() as u64 > expected {
        return Err(Error::format(
            "payload_bytes",
            format!("payload holds {} bytes, expected {expected}", bytes.len()),
        ));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    LabeledDataset::from_parts(num_qubits, dt_ns, bins, layout, labels, samples, ground_truth)
}

/// Manifest of a dataset without its samples, for reports.
pub fn describe(ds: &LabeledDataset) -> Value {
    json!({
        "num_qubits": ds.num_qubits,
        "dt_ns": ds.dt_ns,
        "bins": ds.bins,
        "shots": ds.num_shots(),
        "layout": ds.layout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(num_qubits: usize, shots_per_state: usize, bins: usize) -> LabeledDataset {
        let mut b = DatasetBuilder::new(num_qubits, 2.0, bins, Layout::Demultiplexed, false);
        for s in 0..(1u32 << num_qubits) {
            for k in 0..shots_per_state {
                let traces: Vec<Trace> = (0..num_qubits)
                    .map(|q| {
                        let v = (s as f64) + 0.25 * k as f64 + q as f64 * 0.5;
                        Trace::new(vec![v; bins], vec![-v; bins], 2.0).unwrap()
                    })
                    .collect();
                b.push_shot(s, &traces, None).unwrap();
            }
        }
        b.finish().unwrap()
    }

    #[test]
    fn bit_convention_round_trips() {
        for state in 0..32u32 {
            let bits: Vec<u8> = (0..5).map(|k| basis_bit(state, k)).collect();
            assert_eq!(encode_basis_state(&bits), state);
        }
        assert_eq!(basis_bit(0b10, 0), 0);
        assert_eq!(basis_bit(0b10, 1), 1);
    }

    #[test]
    fn largest_remainder_reference_counts() {
        assert_eq!(largest_remainder(50_000, &[0.195, 0.105, 0.70]), [9_750, 5_250, 35_000]);
        assert_eq!(largest_remainder(10, &[0.5, 0.2, 0.3]), [5, 2, 3]);
        assert_eq!(largest_remainder(3, &[0.195, 0.105, 0.70]).iter().sum::<usize>(), 3);
    }

    #[test]
    fn split_small_dataset() {
        let ds = toy(1, 10, 4);
        let split = split_dataset(&ds, [0.5, 0.2, 0.3], 1).unwrap();
        assert_eq!(split.per_state_counts, vec![[5, 2, 3], [5, 2, 3]]);
        assert_eq!(split.train.len(), 10);
        assert_eq!(split.validation.len(), 4);
        assert_eq!(split.test.len(), 6);
    }

    #[test]
    fn split_is_deterministic_and_seed_dependent() {
        let ds = toy(2, 20, 3);
        let a = split_dataset(&ds, [0.5, 0.2, 0.3], 9).unwrap();
        let b = split_dataset(&ds, [0.5, 0.2, 0.3], 9).unwrap();
        let c = split_dataset(&ds, [0.5, 0.2, 0.3], 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn split_errors() {
        let ds = toy(1, 10, 2);
        assert!(matches!(split_dataset(&ds, [0.5, 0.2, 0.2], 0), Err(Error::InvalidRatios(_))));
        assert!(matches!(split_dataset(&ds, [0.8, 0.3, -0.1], 0), Err(Error::InvalidRatios(_))));
        let tiny = toy(1, 2, 2);
        assert!(matches!(split_dataset(&tiny, [0.5, 0.2, 0.3], 0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn round_trip_preserves_samples() {
        let ds = toy(2, 3, 5);
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn manifest_with_zero_qubits_rejected() {
        let ds = toy(1, 3, 2);
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let mut v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        v["num_qubits"] = json!(0);
        fs::write(&path, v.to_string()).unwrap();
        match load_dataset(dir.path()) {
            Err(Error::FormatError { field, .. }) => assert_eq!(field, "num_qubits"),
            other => panic!("expected FormatError, got {other:?}"),
        }
    }

    #[test]
    fn wrong_format_tag_rejected() {
        let ds = toy(1, 3, 2);
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let mut v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        v["format"] = json!("rdfmt-0");
        fs::write(&path, v.to_string()).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::FormatError { field, .. }) if field == "format"));
    }

    #[test]
    fn truncated_payload_detected() {
        let ds = toy(1, 3, 4);
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let blob = dir.path().join(PAYLOAD_FILE);
        let bytes = fs::read(&blob).unwrap();
        fs::write(&blob, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::PayloadTruncated { .. })));
    }

    #[test]
    fn out_of_range_label_rejected() {
        let r = LabeledDataset::from_parts(1, 2.0, 1, Layout::Demultiplexed, vec![2], vec![0.0; 2], None);
        assert!(matches!(r, Err(Error::FormatError { .. })));
    }

    proptest! {
        #[test]
        fn split_partitions_every_shot(
            per_state in prop::collection::vec(3usize..40, 4),
            seed in any::<u64>(),
            a in 0.05f64..0.9,
            b in 0.05f64..0.9,
        ) {
            prop_assume!(a + b < 0.95);
            let ratios = [a, b, 1.0 - a - b];
            let mut builder = DatasetBuilder::new(2, 2.0, 1, Layout::Demultiplexed, false);
            let t = Trace::new(vec![0.0], vec![0.0], 2.0).unwrap();
            for (s, &n) in per_state.iter().enumerate() {
                for _ in 0..n {
                    builder.push_shot(s as u32, &[t.clone(), t.clone()], None).unwrap();
                }
            }
            let ds = builder.finish().unwrap();
            let split = split_dataset(&ds, ratios, seed).unwrap();
            let mut all: Vec<usize> = split.train.iter().chain(&split.validation).chain(&split.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..ds.num_shots()).collect::<Vec<_>>());
            for (s, counts) in split.per_state_counts.iter().enumerate() {
                let n = per_state[s] as f64;
                for k in 0..3 {
                    prop_assert!((counts[k] as f64 - ratios[k] * n).abs() <= 1.0);
                }
            }
        }

        #[test]
        fn save_load_is_bit_exact(samples in prop::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), 6)) {
            let ds = LabeledDataset::from_parts(1, 2.0, 3, Layout::Demultiplexed, vec![1], samples, None).unwrap();
            let dir = tempfile::tempdir().unwrap();
            save_dataset(&ds, dir.path()).unwrap();
            let back = load_dataset(dir.path()).unwrap();
            prop_assert_eq!(
                back.raw_samples().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                ds.raw_samples().iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
