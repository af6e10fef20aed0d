//! Fixed-point inference with power-of-two scales.
//!
//! Every tensor is quantized symmetrically to signed `bits`-bit integers with
//! a scale `2^-f`, where `f` (the number of fractional bits) is the largest
//! value keeping the tensor's peak magnitude representable. Layer inputs use
//! scales calibrated on a feature set; values outside the calibrated range
//! saturate.
//!
//! A layer accumulates `b + Σ w x` in a signed 64-bit register at scale
//! `2^-(f_w + f_x)`. The exact sum needs at most `2*bits + ceil(log2(fan_in))`
//! bits (plus one for the bias); any step that would leave the 64-bit range
//! is reported as [`Error::AccumulatorOverflow`]. Hidden accumulators pass
//! through the rectifier and are requantized to the next layer's input scale
//! with round-half-up shifts; the output accumulator is dequantized before
//! the softmax.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{softmax, NetworkModel, Standardization};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedLayer {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols`, scale `2^-weight_frac_bits`.
    pub weights: Vec<i64>,
    pub weight_frac_bits: i32,
    /// Input scale `2^-input_frac_bits`.
    pub input_frac_bits: i32,
    /// Bias at the accumulator scale `2^-(weight_frac_bits + input_frac_bits)`.
    pub bias: Vec<i64>,
}

impl QuantizedLayer {
    pub fn acc_frac_bits(&self) -> i32 {
        self.weight_frac_bits + self.input_frac_bits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedModel {
    pub bits: u32,
    pub standardization: Standardization,
    pub layers: Vec<QuantizedLayer>,
}

fn qmax(bits: u32) -> i64 {
    (1i64 << (bits - 1)) - 1
}

/// Largest `f` with `peak * 2^f <= qmax`.
fn frac_bits_for(peak: f64, bits: u32) -> i32 {
    if !(peak > 0.0) {
        return bits as i32 - 1;
    }
    let f = ((qmax(bits) as f64) / peak).log2().floor() as i32;
    f.clamp(-60, 60)
}

fn quantize_value(v: f64, frac: i32, bits: u32) -> i64 {
    let q = (v * 2f64.powi(frac)).round();
    let m = qmax(bits) as f64;
    q.clamp(-m, m) as i64
}

/// Rounds `acc * 2^-shift` half up (`shift > 0`) or scales it up exactly.
fn rescale(acc: i64, shift: i32, layer: usize) -> Result<i64> {
    if shift > 0 {
        if shift >= 63 {
            return Ok(0);
        }
        let half = 1i64 << (shift - 1);
        Ok(acc.checked_add(half).ok_or(Error::AccumulatorOverflow { layer })? >> shift)
    } else if shift < 0 {
        let s = (-shift) as u32;
        if s >= 63 {
            return if acc == 0 { Ok(0) } else { Err(Error::AccumulatorOverflow { layer }) };
        }
        acc.checked_mul(1i64 << s).ok_or(Error::AccumulatorOverflow { layer })
    } else {
        Ok(acc)
    }
}

/// Quantizes `model` to `bits`-bit fixed point, calibrating layer input
/// ranges on the raw feature rows in `calibration`.
pub fn quantize(model: &NetworkModel, bits: u32, calibration: ArrayView2<f64>) -> Result<QuantizedModel> {
    if !(8..=32).contains(&bits) {
        return Err(Error::InvalidConfig(format!("bit width {bits} outside 8..=32")));
    }
    if calibration.nrows() == 0 {
        return Err(Error::InsufficientData("quantization needs calibration features".into()));
    }
    if calibration.ncols() != model.spec.input_size {
        return Err(Error::FeatureShapeError {
            expected: model.spec.input_size,
            found: calibration.ncols(),
        });
    }
    let x = model.standardization.apply(calibration);
    let (_, act) = model.forward_cache(x.view());

    let mut layers = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter().enumerate() {
        let input_peak = act[l].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let weight_peak = layer.weights.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let input_frac_bits = frac_bits_for(input_peak, bits);
        let weight_frac_bits = frac_bits_for(weight_peak, bits);
        let acc_frac = input_frac_bits + weight_frac_bits;
        let bias = layer
            .bias
            .iter()
            .map(|&b| {
                let v = (b * 2f64.powi(acc_frac)).round();
                if v.abs() >= 9.2e18 {
                    Err(Error::AccumulatorOverflow { layer: l })
                } else {
                    Ok(v as i64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        layers.push(QuantizedLayer {
            rows: layer.weights.nrows(),
            cols: layer.weights.ncols(),
            weights: layer
                .weights
                .iter()
                .map(|&w| quantize_value(w, weight_frac_bits, bits))
                .collect(),
            weight_frac_bits,
            input_frac_bits,
            bias,
        });
    }
    Ok(QuantizedModel {
        bits,
        standardization: model.standardization.clone(),
        layers,
    })
}

/// Integer forward pass; returns the softmax of the dequantized logits.
pub fn forward_q(model: &QuantizedModel, features: &[f64]) -> Result<Vec<f64>> {
    let first = &model.layers[0];
    if features.len() != first.cols {
        return Err(Error::FeatureShapeError {
            expected: first.cols,
            found: features.len(),
        });
    }
    let mut x: Vec<i64> = model
        .standardization
        .apply_one(features)
        .iter()
        .map(|&v| quantize_value(v, first.input_frac_bits, model.bits))
        .collect();
    let last = model.layers.len() - 1;
    for (l, layer) in model.layers.iter().enumerate() {
        let overflow = || Error::AccumulatorOverflow { layer: l };
        let mut acc = Vec::with_capacity(layer.rows);
        for (row, &b) in layer.weights.chunks_exact(layer.cols).zip(&layer.bias) {
            let mut a = b;
            for (&w, &v) in row.iter().zip(&x) {
                a = a.checked_add(w.checked_mul(v).ok_or_else(overflow)?).ok_or_else(overflow)?;
            }
            acc.push(a);
        }
        if l == last {
            let scale = 2f64.powi(-layer.acc_frac_bits());
            let logits: Vec<f64> = acc.iter().map(|&a| a as f64 * scale).collect();
            return Ok(softmax(&logits));
        }
        let next = &model.layers[l + 1];
        let shift = layer.acc_frac_bits() - next.input_frac_bits;
        let m = qmax(model.bits);
        x = acc
            .into_iter()
            .map(|a| rescale(a.max(0), shift, l).map(|v| v.clamp(-m, m)))
            .collect::<Result<_>>()?;
    }
    unreachable!("network has at least one layer")
}
