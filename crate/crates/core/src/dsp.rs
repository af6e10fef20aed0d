//! Demultiplexing, boxcar filtering and matched filters.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{self, Accumulator};
use crate::trace::Trace;

/// Phase in radians of a tone at `freq_mhz` after `t_ns` nanoseconds.
#[inline]
pub(crate) fn tone_phase(freq_mhz: f64, t_ns: f64) -> f64 {
    2.0 * PI * freq_mhz * t_ns * 1e-3
}

fn check_window(k: usize, len: usize) -> Result<()> {
    if k == 0 || k > len {
        return Err(Error::InvalidWindow { window: k, max: len });
    }
    Ok(())
}

/// Centered moving average of width `k` over complex samples; edge bins
/// average over the part of the window that exists.
fn smooth_complex(samples: &[Complex64], k: usize) -> Vec<Complex64> {
    let n = samples.len();
    let left = (k - 1) / 2;
    let right = k - 1 - left;
    (0..n)
        .map(|t| {
            let lo = t.saturating_sub(left);
            let hi = (t + right).min(n - 1);
            let window = &samples[lo..=hi];
            let re = sum::sum(window.iter().map(|z| z.re));
            let im = sum::sum(window.iter().map(|z| z.im));
            Complex64::new(re, im) / window.len() as f64
        })
        .collect()
}

/// Moving average of width `k`.
///
/// Without decimation the window is centered and the output keeps the input
/// length. With decimation the trace is cut into consecutive non-overlapping
/// windows of `k` bins, one output sample per complete window, and the output
/// sample interval becomes `k * dt`.
pub fn boxcar(trace: &Trace, k: usize, decimate: bool) -> Result<Trace> {
    check_window(k, trace.len())?;
    if decimate {
        let windows = trace.len() / k;
        let mean = |xs: &[f64], w: usize| sum::sum(xs[w * k..(w + 1) * k].iter().copied()) / k as f64;
        let i = (0..windows).map(|w| mean(trace.samples_i(), w)).collect();
        let q = (0..windows).map(|w| mean(trace.samples_q(), w)).collect();
        Trace::new(i, q, trace.dt_ns() * k as f64)
    } else {
        let smoothed = smooth_complex(&trace.to_complex(), k);
        Trace::from_complex(&smoothed, trace.dt_ns())
    }
}

/// Digital down-conversion of the tone at `if_freq_mhz` followed by a
/// same-rate boxcar low-pass of `boxcar_len` bins.
pub fn demultiplex(composite: &Trace, if_freq_mhz: f64, boxcar_len: usize) -> Result<Trace> {
    check_window(boxcar_len, composite.len())?;
    let dt = composite.dt_ns();
    let mixed: Vec<Complex64> = composite
        .iter_complex()
        .enumerate()
        .map(|(t, z)| z * Complex64::from_polar(1.0, -tone_phase(if_freq_mhz, t as f64 * dt)))
        .collect();
    Trace::from_complex(&smooth_complex(&mixed, boxcar_len), dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    /// Separates prepared '0' from prepared '1'.
    State,
    /// Separates relaxation traces from trusted ground-state traces.
    Relaxation,
}

/// A trained complex matched-filter envelope plus decision threshold.
///
/// The filter output for trace `z` is `Re Σ_t conj(e(t)) z(t)`; outputs above
/// `threshold` are assigned to the second class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedFilter {
    pub envelope_i: Vec<f64>,
    pub envelope_q: Vec<f64>,
    pub threshold: f64,
    pub trained_on_bins: usize,
    pub kind: FilterKind,
}

impl MatchedFilter {
    pub fn new(envelope_i: Vec<f64>, envelope_q: Vec<f64>, threshold: f64, kind: FilterKind) -> Result<Self> {
        let mf = Self {
            trained_on_bins: envelope_i.len(),
            envelope_i,
            envelope_q,
            threshold,
            kind,
        };
        mf.validate()?;
        Ok(mf)
    }

    pub fn validate(&self) -> Result<()> {
        if self.envelope_i.len() != self.trained_on_bins || self.envelope_q.len() != self.trained_on_bins {
            return Err(Error::LengthMismatch {
                expected: self.trained_on_bins,
                found: self.envelope_i.len().min(self.envelope_q.len()),
            });
        }
        if self.trained_on_bins == 0 || self.energy(self.trained_on_bins) == 0.0 {
            return Err(Error::DegenerateClasses("matched filter envelope is all zero".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::DegenerateClasses("non-finite threshold".into()));
        }
        Ok(())
    }

    /// Envelope energy `Σ |e(t)|²` over the first `bins` bins.
    pub fn energy(&self, bins: usize) -> f64 {
        let mut acc = Accumulator::default();
        for (a, b) in self.envelope_i[..bins].iter().zip(&self.envelope_q[..bins]) {
            acc.add_product(*a, *a);
            acc.add_product(*b, *b);
        }
        acc.value()
    }

    pub fn classify(&self, output: f64) -> u8 {
        u8::from(output > self.threshold)
    }
}

/// Per-bin complex means and sum of squared deviations of a class.
fn class_moments(traces: &[&Trace], bins: usize) -> (Vec<Complex64>, Vec<f64>) {
    let n = traces.len() as f64;
    let mut mean = vec![Complex64::new(0.0, 0.0); bins];
    for tr in traces {
        for (m, z) in mean.iter_mut().zip(tr.iter_complex()) {
            *m += z;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut ss = vec![0.0; bins];
    for tr in traces {
        for ((s, m), z) in ss.iter_mut().zip(&mean).zip(tr.iter_complex()) {
            *s += (z - m).norm_sqr();
        }
    }
    (mean, ss)
}

/// Envelope `(mean_b - mean_a) / pooled_var` per bin.
///
/// The pooled variance is the complex (I plus Q) per-bin variance of the
/// per-shot deviations from their own class mean, with `n_a + n_b - 2`
/// degrees of freedom. Bins whose variance falls below `1e-9` of the peak
/// per-bin variance are floored there; if every bin is noiseless the raw mean
/// difference is used.
pub(crate) fn fit_envelope(class_a: &[&Trace], class_b: &[&Trace]) -> Result<(Vec<f64>, Vec<f64>)> {
    for (name, class) in [("first", class_a), ("second", class_b)] {
        if class.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{name} class has {} traces, need at least 2",
                class.len()
            )));
        }
    }
    let bins = class_a[0].len();
    if let Some(bad) = class_a.iter().chain(class_b).find(|t| t.len() != bins) {
        return Err(Error::LengthMismatch {
            expected: bins,
            found: bad.len(),
        });
    }
    let (mean_a, ss_a) = class_moments(class_a, bins);
    let (mean_b, ss_b) = class_moments(class_b, bins);
    let dof = (class_a.len() + class_b.len() - 2) as f64;
    let var: Vec<f64> = ss_a.iter().zip(&ss_b).map(|(a, b)| (a + b) / dof).collect();
    let diff: Vec<Complex64> = mean_b.iter().zip(&mean_a).map(|(b, a)| b - a).collect();

    let max_var = var.iter().cloned().fold(0.0, f64::max);
    let scale = mean_a
        .iter()
        .chain(&mean_b)
        .map(|m| m.norm())
        .fold(max_var.sqrt(), f64::max);
    let max_diff = diff.iter().map(|d| d.norm()).fold(0.0, f64::max);
    if max_diff <= 1e-12 * scale || max_diff == 0.0 {
        return Err(Error::DegenerateClasses(format!(
            "class means coincide in every bin (max difference {max_diff:e})"
        )));
    }

    let floor = 1e-9 * max_var;
    let envelope: Vec<Complex64> = if max_var < 1e-30 {
        diff
    } else {
        diff.iter().zip(&var).map(|(d, v)| d / v.max(floor)).collect()
    };
    Ok(envelope.iter().map(|e| (e.re, e.im)).unzip())
}

/// Cut maximizing balanced accuracy when outputs above the cut are class 1.
///
/// Candidates are midpoints between adjacent distinct sorted outputs; ties go
/// to the lowest candidate.
pub(crate) fn best_threshold(outputs_0: &[f64], outputs_1: &[f64]) -> f64 {
    let mut all: Vec<(f64, u8)> = outputs_0
        .iter()
        .map(|&v| (v, 0u8))
        .chain(outputs_1.iter().map(|&v| (v, 1u8)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n0 = outputs_0.len() as f64;
    let n1 = outputs_1.len() as f64;

    let mut below_0 = 0usize;
    let mut below_1 = 0usize;
    let mut best = (f64::NEG_INFINITY, all[0].0);
    let mut idx = 0;
    while idx < all.len() {
        let v = all[idx].0;
        while idx < all.len() && all[idx].0 == v {
            if all[idx].1 == 0 {
                below_0 += 1;
            } else {
                below_1 += 1;
            }
            idx += 1;
        }
        if idx == all.len() {
            break;
        }
        let cut = 0.5 * (v + all[idx].0);
        let tnr = below_0 as f64 / n0;
        let tpr = (n1 - below_1 as f64) / n1;
        let balanced = 0.5 * (tnr + tpr);
        if balanced > best.0 {
            best = (balanced, cut);
        }
    }
    best.1
}

fn project(envelope_i: &[f64], envelope_q: &[f64], trace: &Trace, bins: usize) -> f64 {
    let mut acc = Accumulator::default();
    for t in 0..bins {
        acc.add_product(envelope_i[t], trace.samples_i()[t]);
        acc.add_product(envelope_q[t], trace.samples_q()[t]);
    }
    acc.value()
}

pub(crate) fn train_filter(class_a: &[&Trace], class_b: &[&Trace], kind: FilterKind) -> Result<MatchedFilter> {
    let (envelope_i, envelope_q) = fit_envelope(class_a, class_b)?;
    let bins = envelope_i.len();
    let out_a: Vec<f64> = class_a.iter().map(|t| project(&envelope_i, &envelope_q, t, bins)).collect();
    let out_b: Vec<f64> = class_b.iter().map(|t| project(&envelope_i, &envelope_q, t, bins)).collect();
    let threshold = best_threshold(&out_a, &out_b);
    MatchedFilter::new(envelope_i, envelope_q, threshold, kind)
}

/// Trains a state matched filter separating `traces_0` from `traces_1`.
pub fn train_mf(traces_0: &[Trace], traces_1: &[Trace]) -> Result<MatchedFilter> {
    let a: Vec<&Trace> = traces_0.iter().collect();
    let b: Vec<&Trace> = traces_1.iter().collect();
    train_filter(&a, &b, FilterKind::State)
}

/// Filter output over the first `use_bins` bins.
///
/// Truncated outputs are rescaled by `E(full) / E(use_bins)`, the ratio of
/// envelope energies, so that they stay on the full-window scale the
/// threshold and any downstream network were trained on. At
/// `use_bins == trained_on_bins` this is the plain dot product.
pub fn apply_mf(mf: &MatchedFilter, trace: &Trace, use_bins: usize) -> Result<f64> {
    let max = trace.len().min(mf.trained_on_bins);
    check_window(use_bins, max)?;
    let dot = project(&mf.envelope_i, &mf.envelope_q, trace, use_bins);
    if use_bins == mf.trained_on_bins {
        return Ok(dot);
    }
    let partial = mf.energy(use_bins);
    if partial == 0.0 {
        return Err(Error::InvalidWindow { window: use_bins, max });
    }
    Ok(dot * (mf.energy(mf.trained_on_bins) / partial))
}
