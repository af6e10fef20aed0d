//! Small fully connected classifier over the `2^N` basis states.
//!
//! Two rectifier hidden layers and a softmax output, trained with mini-batch
//! momentum SGD on the mean cross-entropy, with early stopping on the
//! validation loss. Inputs are standardized with statistics frozen from the
//! training features; inference always reuses them.

pub mod quant;

pub use quant::{forward_q, quantize, QuantizedLayer, QuantizedModel};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, SplitMix64};

const STREAM_EPOCH: u64 = 0x45_50_4f_43_48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_size: usize,
    pub hidden: [usize; 2],
    pub output_size: usize,
}

impl NetworkSpec {
    pub fn new(input_size: usize, hidden: [usize; 2], output_size: usize) -> Result<Self> {
        let spec = Self {
            input_size,
            hidden,
            output_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `N -> 2N -> 4N -> 2^N`: one matched-filter output per qubit.
    pub fn mf_nn(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, [2 * num_qubits, 4 * num_qubits], 1 << num_qubits)
    }

    /// `2N -> 2N -> 4N -> 2^N`: state and relaxation filter outputs per qubit.
    pub fn mf_rmf_nn(num_qubits: usize) -> Result<Self> {
        Self::new(2 * num_qubits, [2 * num_qubits, 4 * num_qubits], 1 << num_qubits)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.hidden.contains(&0) || self.output_size < 2 {
            return Err(Error::InvalidConfig(format!("invalid network spec {self:?}")));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each of the three layers.
    pub fn layer_shapes(&self) -> [(usize, usize); 3] {
        [
            (self.input_size, self.hidden[0]),
            (self.hidden[0], self.hidden[1]),
            (self.hidden[1], self.output_size),
        ]
    }
}

/// Dense layer computing `W x + b`, `W` stored as `fan_out x fan_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn identity(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    /// Column statistics of `x`; constant columns get unit scale.
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean: Vec<f64> = x.axis_iter(Axis(1)).map(|c| c.sum() / n).collect();
        let std = x
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(c, m)| {
                let v = c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                let s = v.sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    pub fn apply_one(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_validation_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct NetworkModel {
    pub spec: NetworkSpec,
    pub layers: Vec<Layer>,
    pub standardization: Standardization,
    pub meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    spec: NetworkSpec,
    hidden_activation: String,
    output_activation: String,
    standardization: Standardization,
    layers: Vec<LayerFile>,
    meta: TrainingMeta,
}

impl From<NetworkModel> for ModelFile {
    fn from(m: NetworkModel) -> Self {
        ModelFile {
            spec: m.spec,
            hidden_activation: "relu".into(),
            output_activation: "softmax".into(),
            standardization: m.standardization,
            layers: m
                .layers
                .into_iter()
                .map(|l| LayerFile {
                    rows: l.weights.nrows(),
                    cols: l.weights.ncols(),
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
            meta: m.meta,
        }
    }
}

impl TryFrom<ModelFile> for NetworkModel {
    type Error = String;

    fn try_from(f: ModelFile) -> std::result::Result<Self, String> {
        if f.hidden_activation != "relu" || f.output_activation != "softmax" {
            return Err("only relu hidden / softmax output networks are supported".into());
        }
        let layers = f
            .layers
            .into_iter()
            .map(|l| {
                let weights = Array2::from_shape_vec((l.rows, l.cols), l.weights).map_err(|e| e.to_string())?;
                Ok(Layer {
                    weights,
                    bias: Array1::from(l.bias),
                })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let model = NetworkModel {
            spec: f.spec,
            layers,
            standardization: f.standardization,
            meta: f.meta,
        };
        model.validate().map_err(|e| e.to_string())?;
        Ok(model)
    }
}

impl NetworkModel {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let shapes = self.spec.layer_shapes();
        if self.layers.len() != 3 {
            return Err(Error::InvalidConfig(format!("expected 3 layers, found {}", self.layers.len())));
        }
        for (l, (layer, (fan_in, fan_out))) in self.layers.iter().zip(shapes).enumerate() {
            if layer.weights.dim() != (fan_out, fan_in) || layer.bias.len() != fan_out {
                return Err(Error::InvalidConfig(format!("layer {l} shape inconsistent with spec")));
            }
        }
        let st = &self.standardization;
        if st.mean.len() != self.spec.input_size || st.std.len() != self.spec.input_size {
            return Err(Error::InvalidConfig("standardization width mismatch".into()));
        }
        if st.std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidConfig("standardization std must be positive".into()));
        }
        Ok(())
    }

    pub fn num_inputs(&self) -> usize {
        self.spec.input_size
    }

    pub fn num_outputs(&self) -> usize {
        self.spec.output_size
    }

    /// Logits for a batch of already standardized rows, plus each layer's
    /// pre-activations and activations.
    fn forward_cache(&self, x: ArrayView2<f64>) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
        let mut activations = vec![x.to_owned()];
        let mut pre = Vec::with_capacity(3);
        for (l, layer) in self.layers.iter().enumerate() {
            let z = activations[l].dot(&layer.weights.t()) + &layer.bias;
            let a = if l + 1 < self.layers.len() {
                z.mapv(|v| v.max(0.0))
            } else {
                z.clone()
            };
            pre.push(z);
            activations.push(a);
        }
        (pre, activations)
    }

    /// Class probabilities for each raw (unstandardized) feature row.
    pub fn forward_batch(&self, features: ArrayView2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.spec.input_size {
            return Err(Error::FeatureShapeError {
                expected: self.spec.input_size,
                found: features.ncols(),
            });
        }
        let x = self.standardization.apply(features);
        let (_, mut act) = self.forward_cache(x.view());
        let mut logits = act.pop().unwrap();
        for mut row in logits.rows_mut() {
            softmax_in_place(&mut row);
        }
        Ok(logits)
    }
}

pub(crate) fn softmax_in_place(row: &mut ndarray::ArrayViewMut1<f64>) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    row.mapv_inplace(|v| (v - max).exp());
    let sum = row.sum();
    row.mapv_inplace(|v| v / sum);
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut a = Array1::from(logits.to_vec());
    softmax_in_place(&mut a.view_mut());
    a.to_vec()
}

/// Freshly initialized network: weights uniform in `±sqrt(6 / fan_in)`,
/// zero biases, identity standardization.
pub fn build(spec: NetworkSpec, seed: u64) -> Result<NetworkModel> {
    spec.validate()?;
    let mut r = rng::stream(seed, &[0x494e4954]);
    let layers = spec
        .layer_shapes()
        .iter()
        .map(|&(fan_in, fan_out)| {
            let bound = (6.0 / fan_in as f64).sqrt();
            let weights = Array2::from_shape_fn((fan_out, fan_in), |_| bound * (2.0 * r.next_f64() - 1.0));
            Layer {
                weights,
                bias: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(NetworkModel {
        spec,
        layers,
        standardization: Standardization::identity(spec.input_size),
        meta: TrainingMeta {
            seed,
            ..TrainingMeta::default()
        },
    })
}

/// Probability vector over the `2^N` basis states for one feature vector.
pub fn forward(model: &NetworkModel, features: &[f64]) -> Result<Vec<f64>> {
    let row = ArrayView2::from_shape((1, features.len()), features).expect("contiguous row");
    let p = model.forward_batch(row)?;
    Ok(p.row(0).to_vec())
}

/// Index of the most probable class; the first maximum wins ties.
pub fn argmax(p: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (k, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = k;
        }
    }
    best
}

/// Gradient of the mean cross-entropy with respect to one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

fn check_batch(model: &NetworkModel, x: ArrayView2<f64>, labels: &[usize]) -> Result<()> {
    if x.ncols() != model.spec.input_size {
        return Err(Error::FeatureShapeError {
            expected: model.spec.input_size,
            found: x.ncols(),
        });
    }
    if x.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            found: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= model.spec.output_size) {
        return Err(Error::InvalidConfig(format!("label {bad} out of range")));
    }
    Ok(())
}

fn log_softmax_loss(logits: &Array2<f64>, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &y) in logits.rows().into_iter().zip(labels) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[y];
    }
    total / labels.len() as f64
}

/// Mean cross-entropy on standardized rows, with analytic gradients.
fn backprop(model: &NetworkModel, x: ArrayView2<f64>, labels: &[usize]) -> (f64, Vec<LayerGradient>) {
    let (pre, act) = model.forward_cache(x);
    let logits = act.last().unwrap();
    let loss = log_softmax_loss(logits, labels);
    let b = labels.len() as f64;

    let mut delta = logits.clone();
    for (mut row, &y) in delta.rows_mut().into_iter().zip(labels) {
        softmax_in_place(&mut row);
        row[y] -= 1.0;
    }
    delta /= b;

    let mut grads = Vec::with_capacity(model.layers.len());
    for l in (0..model.layers.len()).rev() {
        let gw = delta.t().dot(&act[l]);
        let gb = delta.sum_axis(Axis(0));
        grads.push(LayerGradient { weights: gw, bias: gb });
        if l > 0 {
            let mut back = delta.dot(&model.layers[l].weights);
            back.zip_mut_with(&pre[l - 1], |d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = back;
        }
    }
    grads.reverse();
    (loss, grads)
}

/// Mean cross-entropy of `model` on raw feature rows.
pub fn cross_entropy(model: &NetworkModel, features: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    check_batch(model, features, labels)?;
    let x = model.standardization.apply(features);
    let (_, act) = model.forward_cache(x.view());
    Ok(log_softmax_loss(act.last().unwrap(), labels))
}

/// Mean cross-entropy and its analytic gradient on raw feature rows.
pub fn cross_entropy_gradients(
    model: &NetworkModel,
    features: ArrayView2<f64>,
    labels: &[usize],
) -> Result<(f64, Vec<LayerGradient>)> {
    check_batch(model, features, labels)?;
    let x = model.standardization.apply(features);
    Ok(backprop(model, x.view(), labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyper {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub patience: usize,
    pub max_epochs: usize,
    /// Seed of the per-epoch mini-batch shuffles.
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            batch_size: 256,
            learning_rate: 1e-3,
            momentum: 0.9,
            patience: 10,
            max_epochs: 200,
            seed: 0,
        }
    }
}

static TRAINING_RUNS: std::sync::atomic::AtomicUsize = std::sync::atomic::AtomicUsize::new(0);

/// Number of [`train`] calls made in this process.
pub fn training_runs() -> usize {
    TRAINING_RUNS.load(std::sync::atomic::Ordering::SeqCst)
}

/// Trains `model` and returns the snapshot with the lowest validation loss.
///
/// Standardization statistics are fitted on `train_x` before the first
/// epoch. With `max_epochs == 0` the model is returned unchanged. An empty
/// validation set falls back to the training loss for early stopping.
pub fn train(
    model: &NetworkModel,
    train_x: ArrayView2<f64>,
    train_y: &[usize],
    val_x: ArrayView2<f64>,
    val_y: &[usize],
    hyper: &TrainHyper,
) -> Result<NetworkModel> {
    TRAINING_RUNS.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
    check_batch(model, train_x, train_y)?;
    check_batch(model, val_x, val_y)?;
    if hyper.max_epochs == 0 {
        return Ok(model.clone());
    }
    if train_y.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if hyper.batch_size == 0 || !(hyper.learning_rate > 0.0) || !(0.0..1.0).contains(&hyper.momentum) {
        return Err(Error::InvalidConfig(format!("invalid hyperparameters {hyper:?}")));
    }

    let mut current = model.clone();
    current.standardization = Standardization::fit(train_x);
    let xs = current.standardization.apply(train_x);
    let (vx, vy) = if val_y.is_empty() {
        (xs.clone(), train_y.to_vec())
    } else {
        (current.standardization.apply(val_x), val_y.to_vec())
    };
    let val_loss = |m: &NetworkModel| {
        let (_, act) = m.forward_cache(vx.view());
        log_softmax_loss(act.last().unwrap(), &vy)
    };

    let mut velocity: Vec<(Array2<f64>, Array1<f64>)> = current
        .layers
        .iter()
        .map(|l| (Array2::zeros(l.weights.dim()), Array1::zeros(l.bias.len())))
        .collect();
    let mut best_loss = val_loss(&current);
    if !best_loss.is_finite() {
        return Err(Error::DivergedTraining { epoch: 0 });
    }
    let mut best = current.clone();
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train_y.len()).collect();
    let mut epochs_run = 0;

    for epoch in 1..=hyper.max_epochs {
        epochs_run = epoch;
        let mut r: SplitMix64 = rng::stream(hyper.seed, &[STREAM_EPOCH, epoch as u64]);
        r.shuffle(&mut order);
        for batch in order.chunks(hyper.batch_size) {
            let bx = xs.select(Axis(0), batch);
            let by: Vec<usize> = batch.iter().map(|&k| train_y[k]).collect();
            let (loss, grads) = backprop(&current, bx.view(), &by);
            if !loss.is_finite() {
                return Err(Error::DivergedTraining { epoch });
            }
            for ((layer, (vw, vb)), g) in current.layers.iter_mut().zip(&mut velocity).zip(&grads) {
                vw.zip_mut_with(&g.weights, |v, &gw| *v = hyper.momentum * *v - hyper.learning_rate * gw);
                vb.zip_mut_with(&g.bias, |v, &gb| *v = hyper.momentum * *v - hyper.learning_rate * gb);
                layer.weights += &*vw;
                layer.bias += &*vb;
            }
        }
        let loss = val_loss(&current);
        if !loss.is_finite() {
            return Err(Error::DivergedTraining { epoch });
        }
        if loss < best_loss {
            best_loss = loss;
            best = current.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= hyper.patience {
                break;
            }
        }
    }
    best.meta = TrainingMeta {
        seed: model.meta.seed,
        epochs_run,
        best_epoch,
        final_validation_loss: Some(best_loss),
    };
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn reference_architectures() {
        let a = NetworkSpec::mf_nn(5).unwrap();
        assert_eq!((a.input_size, a.hidden, a.output_size), (5, [10, 20], 32));
        let b = NetworkSpec::mf_rmf_nn(5).unwrap();
        assert_eq!((b.input_size, b.hidden, b.output_size), (10, [10, 20], 32));
        let m = build(b, 1).unwrap();
        let dims: Vec<_> = m.layers.iter().map(|l| l.weights.dim()).collect();
        assert_eq!(dims, vec![(10, 10), (20, 10), (32, 20)]);
    }

    #[test]
    fn build_is_deterministic() {
        let spec = NetworkSpec::mf_nn(3).unwrap();
        assert_eq!(build(spec, 4).unwrap(), build(spec, 4).unwrap());
        assert_ne!(build(spec, 4).unwrap(), build(spec, 5).unwrap());
    }

    #[test]
    fn zero_network_is_uniform() {
        let mut m = build(NetworkSpec::mf_nn(3).unwrap(), 0).unwrap();
        for l in &mut m.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        let p = forward(&m, &[3.0, -100.0, 7.5]).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 8.0).abs() < 1e-15));
    }

    #[test]
    fn outputs_are_a_distribution_even_for_huge_inputs() {
        let m = build(NetworkSpec::mf_rmf_nn(2).unwrap(), 9).unwrap();
        for x in [[0.0, 0.0, 0.0, 0.0], [1e6, -1e6, 3e5, 1e8], [-1e-9, 2.0, 5.0, -7.0]] {
            let p = forward(&m, &x).unwrap();
            assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn feature_shape_checked() {
        let m = build(NetworkSpec::mf_nn(2).unwrap(), 0).unwrap();
        assert!(matches!(forward(&m, &[1.0]), Err(Error::FeatureShapeError { expected: 2, found: 1 })));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut m = build(NetworkSpec::new(3, [4, 5], 4).unwrap(), 11).unwrap();
        for l in &mut m.layers {
            l.bias.mapv_inplace(|_| 0.1);
        }
        let x = array![[0.3, -1.2, 0.8], [1.5, 0.2, -0.4], [-0.7, 0.9, 1.1], [0.05, -0.3, 0.6]];
        let y = [0usize, 3, 1, 2];
        let (_, grads) = cross_entropy_gradients(&m, x.view(), &y).unwrap();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for l in 0..3 {
            let (rows, cols) = m.layers[l].weights.dim();
            for i in 0..rows {
                for j in 0..cols {
                    let mut p = m.clone();
                    p.layers[l].weights[[i, j]] += eps;
                    let mut n = m.clone();
                    n.layers[l].weights[[i, j]] -= eps;
                    let fd = (cross_entropy(&p, x.view(), &y).unwrap() - cross_entropy(&n, x.view(), &y).unwrap()) / (2.0 * eps);
                    let an = grads[l].weights[[i, j]];
                    worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6));
                }
            }
        }
        assert!(worst <= 1e-4, "max relative error {worst}");
    }

    fn separable(n: usize) -> (Array2<f64>, Vec<usize>) {
        let mut r = SplitMix64::new(2);
        let mut x = Array2::zeros((n, 1));
        let mut y = Vec::with_capacity(n);
        for k in 0..n {
            let label = k % 2;
            let v = if label == 0 { -1.0 - r.next_f64() } else { 1.0 + r.next_f64() };
            x[[k, 0]] = v;
            y.push(label);
        }
        (x, y)
    }

    fn accuracy(m: &NetworkModel, x: ArrayView2<f64>, y: &[usize]) -> f64 {
        let p = m.forward_batch(x).unwrap();
        let hits = p.rows().into_iter().zip(y).filter(|(row, &t)| argmax(row.view()) == t).count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn learns_separable_toy_problem() {
        let (x, y) = separable(400);
        let m = build(NetworkSpec::mf_nn(1).unwrap(), 3).unwrap();
        let hyper = TrainHyper {
            max_epochs: 50,
            batch_size: 32,
            ..TrainHyper::default()
        };
        let trained = train(&m, x.view(), &y, x.view(), &y, &hyper).unwrap();
        assert!(accuracy(&trained, x.view(), &y) >= 0.99);
        assert!(trained.meta.epochs_run <= 50);
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let (x, y) = separable(20);
        let m = build(NetworkSpec::mf_nn(1).unwrap(), 3).unwrap();
        let hyper = TrainHyper {
            max_epochs: 0,
            ..TrainHyper::default()
        };
        assert_eq!(train(&m, x.view(), &y, x.view(), &y, &hyper).unwrap(), m);
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = separable(200);
        let m = build(NetworkSpec::mf_nn(1).unwrap(), 3).unwrap();
        let hyper = TrainHyper {
            max_epochs: 5,
            batch_size: 16,
            seed: 8,
            ..TrainHyper::default()
        };
        let a = train(&m, x.view(), &y, x.view(), &y, &hyper).unwrap();
        let b = train(&m, x.view(), &y, x.view(), &y, &hyper).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_reported() {
        let (x, y) = separable(64);
        let m = build(NetworkSpec::mf_nn(1).unwrap(), 3).unwrap();
        let hyper = TrainHyper {
            learning_rate: 1e200,
            max_epochs: 5,
            ..TrainHyper::default()
        };
        assert!(matches!(
            train(&m, x.view(), &y, x.view(), &y, &hyper),
            Err(Error::DivergedTraining { .. })
        ));
    }

    #[test]
    fn standardization_floors_constant_columns() {
        let x = array![[1.0, 5.0], [3.0, 5.0]];
        let s = Standardization::fit(x.view());
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut m = build(NetworkSpec::mf_rmf_nn(2).unwrap(), 21).unwrap();
        m.standardization.mean[1] = 0.1 + 0.2;
        let text = serde_json::to_string(&m).unwrap();
        let back: NetworkModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_model_json_rejected() {
        let m = build(NetworkSpec::mf_nn(2).unwrap(), 21).unwrap();
        let mut v: serde_json::Value = serde_json::to_value(&m).unwrap();
        v["layers"][0]["rows"] = serde_json::json!(3);
        assert!(serde_json::from_value::<NetworkModel>(v).is_err());
    }
}
