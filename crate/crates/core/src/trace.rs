//! Single-shot IQ traces and the mean trace value.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum;

/// A point in the I-Q plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IqPoint {
    pub i: f64,
    pub q: f64,
}

impl IqPoint {
    pub fn new(i: f64, q: f64) -> Self {
        Self { i, q }
    }

    pub fn distance(&self, other: &IqPoint) -> f64 {
        (self.i - other.i).hypot(self.q - other.q)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.i, self.q)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self { i: z.re, q: z.im }
    }

    pub fn is_finite(&self) -> bool {
        self.i.is_finite() && self.q.is_finite()
    }
}

/// One shot's two-channel time series, sampled every `dt_ns`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples_i: Vec<f64>,
    samples_q: Vec<f64>,
    dt_ns: f64,
}

impl Trace {
    pub fn new(samples_i: Vec<f64>, samples_q: Vec<f64>, dt_ns: f64) -> Result<Self> {
        if samples_i.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if samples_i.len() != samples_q.len() {
            return Err(Error::LengthMismatch {
                expected: samples_i.len(),
                found: samples_q.len(),
            });
        }
        if !(dt_ns > 0.0 && dt_ns.is_finite()) {
            return Err(Error::InvalidTrace(format!("dt must be positive, got {dt_ns}")));
        }
        Ok(Self {
            samples_i,
            samples_q,
            dt_ns,
        })
    }

    pub fn from_complex(samples: &[Complex64], dt_ns: f64) -> Result<Self> {
        let (i, q) = samples.iter().map(|z| (z.re, z.im)).unzip();
        Self::new(i, q, dt_ns)
    }

    /// A trace holding the same point in every bin.
    pub fn constant(point: IqPoint, len: usize, dt_ns: f64) -> Result<Self> {
        Self::new(vec![point.i; len], vec![point.q; len], dt_ns)
    }

    pub fn len(&self) -> usize {
        self.samples_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples_i.is_empty()
    }

    pub fn dt_ns(&self) -> f64 {
        self.dt_ns
    }

    pub fn samples_i(&self) -> &[f64] {
        &self.samples_i
    }

    pub fn samples_q(&self) -> &[f64] {
        &self.samples_q
    }

    pub fn sample(&self, t: usize) -> Complex64 {
        Complex64::new(self.samples_i[t], self.samples_q[t])
    }

    pub fn iter_complex(&self) -> impl ExactSizeIterator<Item = Complex64> + '_ {
        self.samples_i
            .iter()
            .zip(&self.samples_q)
            .map(|(&i, &q)| Complex64::new(i, q))
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.iter_complex().collect()
    }

    /// The first `bins` samples.
    pub fn truncated(&self, bins: usize) -> Result<Self> {
        if bins == 0 || bins > self.len() {
            return Err(Error::InvalidWindow {
                window: bins,
                max: self.len(),
            });
        }
        Ok(Self {
            samples_i: self.samples_i[..bins].to_vec(),
            samples_q: self.samples_q[..bins].to_vec(),
            dt_ns: self.dt_ns,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            samples_i: self.samples_i.iter().map(|x| x * c).collect(),
            samples_q: self.samples_q.iter().map(|x| x * c).collect(),
            dt_ns: self.dt_ns,
        }
    }

    /// Applies `f` to every sample as a complex number.
    pub fn map_complex(&self, mut f: impl FnMut(usize, Complex64) -> Complex64) -> Self {
        let (samples_i, samples_q) = self
            .iter_complex()
            .enumerate()
            .map(|(t, z)| {
                let w = f(t, z);
                (w.re, w.im)
            })
            .unzip();
        Self {
            samples_i,
            samples_q,
            dt_ns: self.dt_ns,
        }
    }
}

/// Per-channel arithmetic mean over all time bins.
pub fn mean_trace_value(trace: &Trace) -> Result<IqPoint> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let n = trace.len() as f64;
    let i = sum::sum(trace.samples_i().iter().copied()) / n;
    let q = sum::sum(trace.samples_q().iter().copied()) / n;
    Ok(IqPoint { i, q })
}
