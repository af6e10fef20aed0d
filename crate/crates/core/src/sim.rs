//! Synthetic frequency-multiplexed readout traces with ground truth.
//!
//! Each qubit's noiseless response to prepared state `s` rings up from the
//! origin toward its steady-state IQ point, `z_s(t) = S_s (1 - exp(-t/τ))`.
//! An excited qubit draws a relaxation time from `Exp(T1)`; if it falls inside
//! the window at `t_r`, the response afterwards is pulled back onto the
//! ground-state trajectory with the same ring time constant,
//! `z(t) = z_0(t) + (z_1(t_r) - z_0(t_r)) exp(-(t - t_r)/τ)`.
//! Excitation events during readout of a ground-state qubit mirror this with
//! the roles of the two trajectories exchanged.
//!
//! Crosstalk mixes responses before noise: qubit `q` observes
//! `Σ_p α[q][p] z_p(t)`. In composite mode each mixed and noisy envelope is
//! modulated onto its intermediate frequency and the tones are summed.
//!
//! Randomness comes from per-(state, shot, qubit, purpose) streams, so a shot's
//! samples do not depend on how many shots were generated.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{basis_bit, DatasetBuilder, LabeledDataset, Layout, TransitionEvent, TransitionKind};
use crate::dsp::tone_phase;
use crate::error::{Error, Result};
use crate::rng::{self, SplitMix64};
use crate::trace::{IqPoint, Trace};

const STREAM_RELAX: u64 = 1;
const STREAM_EXCITE: u64 = 2;
const STREAM_NOISE: u64 = 3;

const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitModel {
    pub steady_state_0: IqPoint,
    pub steady_state_1: IqPoint,
    /// Resonator ring time constant; 0 means an instantaneous response.
    pub ring_up_tau_ns: f64,
    /// Relaxation time constant; `inf` disables relaxation.
    pub t1_ns: f64,
    #[serde(default)]
    pub if_freq_mhz: f64,
    /// Standard deviation of the per-sample, per-channel Gaussian noise.
    pub noise_sigma: f64,
    /// Probability of a 0 -> 1 flip during the readout window.
    #[serde(default)]
    pub excitation_prob: f64,
}

impl QubitModel {
    fn ring(&self, t_ns: f64) -> f64 {
        if self.ring_up_tau_ns == 0.0 {
            1.0
        } else {
            1.0 - (-t_ns / self.ring_up_tau_ns).exp()
        }
    }

    fn decay(&self, dt_ns: f64) -> f64 {
        if self.ring_up_tau_ns == 0.0 {
            0.0
        } else {
            (-dt_ns / self.ring_up_tau_ns).exp()
        }
    }

    /// Noiseless trajectory of state `s` with no transition.
    pub fn steady_trajectory(&self, s: u8, t_ns: f64) -> Complex64 {
        let target = if s == 0 { self.steady_state_0 } else { self.steady_state_1 };
        target.to_complex() * self.ring(t_ns)
    }

    /// Noiseless response for prepared state `s` with an optional transition.
    pub fn response(&self, s: u8, event: Option<TransitionEvent>, t_ns: f64) -> Complex64 {
        match event {
            Some(ev) if t_ns >= ev.time_ns => {
                let (from, to) = match ev.kind {
                    TransitionKind::Relaxation => (1, 0),
                    TransitionKind::Excitation => (0, 1),
                };
                let gap = self.steady_trajectory(from, ev.time_ns) - self.steady_trajectory(to, ev.time_ns);
                self.steady_trajectory(to, t_ns) + gap * self.decay(t_ns - ev.time_ns)
            }
            _ => self.steady_trajectory(s, t_ns),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub qubits: Vec<QubitModel>,
    /// `crosstalk[q][p]`: weight of qubit `p`'s response in qubit `q`'s channel.
    pub crosstalk: Vec<Vec<f64>>,
}

impl NoiseModel {
    /// Identity crosstalk for the given qubits.
    pub fn without_crosstalk(qubits: Vec<QubitModel>) -> Self {
        let n = qubits.len();
        let crosstalk = (0..n)
            .map(|q| (0..n).map(|p| if p == q { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { qubits, crosstalk }
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn if_freqs_mhz(&self) -> Vec<f64> {
        self.qubits.iter().map(|q| q.if_freq_mhz).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.qubits.len();
        if n == 0 {
            return Err(Error::InvalidConfig("noise model has no qubits".into()));
        }
        for (k, q) in self.qubits.iter().enumerate() {
            if !q.steady_state_0.is_finite() || !q.steady_state_1.is_finite() {
                return Err(Error::DegenerateModel(format!("qubit {k}: non-finite steady state")));
            }
            if q.steady_state_0.distance(&q.steady_state_1) == 0.0 {
                return Err(Error::DegenerateModel(format!("qubit {k}: steady states coincide")));
            }
            if !(q.t1_ns > 0.0) {
                return Err(Error::DegenerateModel(format!("qubit {k}: t1 must be positive")));
            }
            if !(q.ring_up_tau_ns >= 0.0 && q.ring_up_tau_ns.is_finite()) {
                return Err(Error::DegenerateModel(format!("qubit {k}: ring_up_tau must be finite and >= 0")));
            }
            if !(q.noise_sigma >= 0.0 && q.noise_sigma.is_finite()) {
                return Err(Error::DegenerateModel(format!("qubit {k}: noise_sigma must be >= 0")));
            }
            if !(0.0..0.5).contains(&q.excitation_prob) {
                return Err(Error::DegenerateModel(format!("qubit {k}: excitation_prob must be in [0, 0.5)")));
            }
            if !q.if_freq_mhz.is_finite() {
                return Err(Error::DegenerateModel(format!("qubit {k}: non-finite IF frequency")));
            }
        }
        if self.crosstalk.len() != n || self.crosstalk.iter().any(|row| row.len() != n) {
            return Err(Error::DegenerateModel(format!("crosstalk must be {n}x{n}")));
        }
        for (q, row) in self.crosstalk.iter().enumerate() {
            for (p, &a) in row.iter().enumerate() {
                if p == q && a != 1.0 {
                    return Err(Error::DegenerateModel(format!("crosstalk[{q}][{q}] must be 1")));
                }
                if !(a.abs() <= 1.0) {
                    return Err(Error::DegenerateModel(format!("|crosstalk[{q}][{p}]| must be <= 1")));
                }
            }
        }
        Ok(())
    }

    /// Rejects intermediate frequencies closer than `2 / duration`.
    pub fn check_frequency_spacing(&self, duration_ns: f64) -> Result<()> {
        let min_spacing_mhz = 2.0 / (duration_ns * 1e-3);
        let freqs = self.if_freqs_mhz();
        for a in 0..freqs.len() {
            for b in a + 1..freqs.len() {
                if (freqs[a] - freqs[b]).abs() < min_spacing_mhz {
                    return Err(Error::FrequencyCollision {
                        a_mhz: freqs[a],
                        b_mhz: freqs[b],
                        min_spacing_mhz,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Demultiplexed,
    Composite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub num_qubits: usize,
    pub duration_ns: f64,
    pub dt_ns: f64,
    pub shots_per_basis_state: usize,
    #[serde(default)]
    pub seed: u64,
    pub mode: SimMode,
}

impl SimConfig {
    pub fn bins(&self) -> Result<usize> {
        if !(self.dt_ns > 0.0 && self.duration_ns > 0.0) {
            return Err(Error::InvalidConfig("duration and dt must be positive".into()));
        }
        let ratio = self.duration_ns / self.dt_ns;
        let bins = ratio.round();
        if bins < 1.0 || (ratio - bins).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "duration {} ns is not a multiple of dt {} ns",
                self.duration_ns, self.dt_ns
            )));
        }
        Ok(bins as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_qubits > 16 {
            return Err(Error::InvalidConfig("num_qubits must be in 1..=16".into()));
        }
        if self.shots_per_basis_state == 0 {
            return Err(Error::InvalidConfig("shots_per_basis_state must be >= 1".into()));
        }
        self.bins().map(|_| ())
    }
}

/// `out[q] = Σ_p α[q][p] in[p]` sample by sample.
fn mix_crosstalk(envelopes: &[Vec<Complex64>], crosstalk: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
    let bins = envelopes[0].len();
    crosstalk
        .iter()
        .map(|row| {
            (0..bins)
                .map(|t| row.iter().zip(envelopes).map(|(a, env)| env[t] * *a).sum())
                .collect()
        })
        .collect()
}

fn modulate_and_sum(envelopes: &[Vec<Complex64>], freqs_mhz: &[f64], dt_ns: f64) -> Vec<Complex64> {
    let bins = envelopes[0].len();
    (0..bins)
        .map(|t| {
            let t_ns = t as f64 * dt_ns;
            envelopes
                .iter()
                .zip(freqs_mhz)
                .map(|(env, &f)| env[t] * Complex64::from_polar(1.0, tone_phase(f, t_ns)))
                .sum()
        })
        .collect()
}

/// Mixes per-qubit envelopes through the crosstalk matrix and sums them on
/// their intermediate-frequency tones.
pub fn compose_multiplexed(per_qubit: &[Trace], noise: &NoiseModel) -> Result<Trace> {
    if per_qubit.len() != noise.num_qubits() {
        return Err(Error::LengthMismatch {
            expected: noise.num_qubits(),
            found: per_qubit.len(),
        });
    }
    let len = per_qubit[0].len();
    let dt = per_qubit[0].dt_ns();
    for tr in per_qubit {
        if tr.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: tr.len(),
            });
        }
        if tr.dt_ns() != dt {
            return Err(Error::InvalidTrace("traces must share dt".into()));
        }
    }
    let envs: Vec<Vec<Complex64>> = per_qubit.iter().map(Trace::to_complex).collect();
    let mixed = mix_crosstalk(&envs, &noise.crosstalk);
    Trace::from_complex(&modulate_and_sum(&mixed, &noise.if_freqs_mhz(), dt), dt)
}

/// In-window transition for qubit `q` of a shot, if any.
fn draw_event(seed: u64, state: u32, shot: usize, q: usize, model: &QubitModel, duration_ns: f64) -> Option<TransitionEvent> {
    let keys = |purpose| [u64::from(state), shot as u64, q as u64, purpose];
    if basis_bit(state, q) == 1 {
        if model.t1_ns.is_infinite() {
            return None;
        }
        let mut r = rng::stream(seed, &keys(STREAM_RELAX));
        let t = -model.t1_ns * (1.0 - r.next_f64()).ln();
        (t < duration_ns).then_some(TransitionEvent {
            kind: TransitionKind::Relaxation,
            time_ns: t,
        })
    } else {
        if model.excitation_prob == 0.0 {
            return None;
        }
        let mut r = rng::stream(seed, &keys(STREAM_EXCITE));
        let flip = r.next_f64() < model.excitation_prob;
        let t = r.next_f64() * duration_ns;
        flip.then_some(TransitionEvent {
            kind: TransitionKind::Excitation,
            time_ns: t,
        })
    }
}

struct Shot {
    traces: Vec<Trace>,
    events: Vec<Option<TransitionEvent>>,
}

fn simulate_shot(config: &SimConfig, noise: &NoiseModel, bins: usize, state: u32, shot: usize) -> Result<Shot> {
    let n = config.num_qubits;
    let dt = config.dt_ns;
    let events: Vec<Option<TransitionEvent>> = noise
        .qubits
        .iter()
        .enumerate()
        .map(|(q, m)| draw_event(config.seed, state, shot, q, m, config.duration_ns))
        .collect();
    let clean: Vec<Vec<Complex64>> = noise
        .qubits
        .iter()
        .enumerate()
        .map(|(q, m)| {
            let s = basis_bit(state, q);
            (0..bins).map(|t| m.response(s, events[q], t as f64 * dt)).collect()
        })
        .collect();
    let mut mixed = mix_crosstalk(&clean, &noise.crosstalk);
    for (q, env) in mixed.iter_mut().enumerate() {
        let sigma = noise.qubits[q].noise_sigma;
        if sigma > 0.0 {
            let mut r: SplitMix64 = rng::stream(config.seed, &[u64::from(state), shot as u64, q as u64, STREAM_NOISE]);
            for z in env.iter_mut() {
                let ni: f64 = StandardNormal.sample(&mut r);
                let nq: f64 = StandardNormal.sample(&mut r);
                *z += Complex64::new(ni, nq) * sigma;
            }
        }
    }
    let traces = match config.mode {
        SimMode::Demultiplexed => mixed
            .iter()
            .map(|env| Trace::from_complex(env, dt))
            .collect::<Result<Vec<_>>>()?,
        SimMode::Composite => vec![Trace::from_complex(
            &modulate_and_sum(&mixed, &noise.if_freqs_mhz(), dt),
            dt,
        )?],
    };
    debug_assert!(traces.len() == if config.mode == SimMode::Composite { 1 } else { n });
    Ok(Shot { traces, events })
}

/// Generates `shots_per_basis_state` shots for each of the `2^N` basis states,
/// ordered by state then shot.
pub fn generate(config: &SimConfig, noise: &NoiseModel) -> Result<LabeledDataset> {
    config.validate()?;
    noise.validate()?;
    if noise.num_qubits() != config.num_qubits {
        return Err(Error::InvalidConfig(format!(
            "config has {} qubits, noise model {}",
            config.num_qubits,
            noise.num_qubits()
        )));
    }
    let layout = match config.mode {
        SimMode::Demultiplexed => Layout::Demultiplexed,
        SimMode::Composite => {
            noise.check_frequency_spacing(config.duration_ns)?;
            Layout::Composite {
                if_freqs_mhz: noise.if_freqs_mhz(),
            }
        }
    };
    let bins = config.bins()?;
    let per_state = config.shots_per_basis_state;
    let total = per_state << config.num_qubits;
    let mut builder = DatasetBuilder::new(config.num_qubits, config.dt_ns, bins, layout, true);
    for start in (0..total).step_by(CHUNK) {
        let end = (start + CHUNK).min(total);
        let shots: Vec<Shot> = (start..end)
            .into_par_iter()
            .map(|g| simulate_shot(config, noise, bins, (g / per_state) as u32, g % per_state))
            .collect::<Result<_>>()?;
        for (g, shot) in (start..end).zip(shots) {
            builder.push_shot((g / per_state) as u32, &shot.traces, Some(shot.events))?;
        }
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::demultiplex;
    use crate::trace::mean_trace_value;

    fn qubit(s0: (f64, f64), s1: (f64, f64)) -> QubitModel {
        QubitModel {
            steady_state_0: IqPoint::new(s0.0, s0.1),
            steady_state_1: IqPoint::new(s1.0, s1.1),
            ring_up_tau_ns: 20.0,
            t1_ns: f64::INFINITY,
            if_freq_mhz: 0.0,
            noise_sigma: 0.0,
            excitation_prob: 0.0,
        }
    }

    fn config(n: usize, shots: usize, mode: SimMode) -> SimConfig {
        SimConfig {
            num_qubits: n,
            duration_ns: 1000.0,
            dt_ns: 2.0,
            shots_per_basis_state: shots,
            seed: 3,
            mode,
        }
    }

    #[test]
    fn noiseless_traces_settle_on_steady_states() {
        let noise = NoiseModel::without_crosstalk(vec![qubit((1.0, 0.0), (-1.0, 0.5)), qubit((0.0, 1.0), (0.3, -0.7))]);
        let ds = generate(&config(2, 2, SimMode::Demultiplexed), &noise).unwrap();
        for shot in 0..ds.num_shots() {
            for q in 0..2 {
                let tr = ds.trace(shot, q);
                let m = &noise.qubits[q];
                let target = if ds.bit(shot, q) == 0 { m.steady_state_0 } else { m.steady_state_1 };
                for t in 400..500 {
                    assert!((tr.samples_i()[t] - target.i).abs() < 1e-6);
                    assert!((tr.samples_q()[t] - target.q).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn noiseless_response_fixed_point_in_f64() {
        let m = qubit((1.0, 0.0), (-1.0, 0.5));
        for s in [0u8, 1] {
            let z = m.response(s, None, 998.0);
            let target = if s == 0 { m.steady_state_0 } else { m.steady_state_1 };
            assert!((z - target.to_complex()).norm() < 1e-9);
        }
    }

    #[test]
    fn infinite_t1_has_no_events() {
        let mut q = qubit((1.0, 0.0), (-1.0, 0.0));
        q.noise_sigma = 0.3;
        let ds = generate(&config(1, 200, SimMode::Demultiplexed), &NoiseModel::without_crosstalk(vec![q])).unwrap();
        assert!(ds.ground_truth().unwrap().iter().all(|row| row[0].is_none()));
    }

    #[test]
    fn relaxation_rate_matches_exponential_cdf() {
        let mut q = qubit((1.0, 0.0), (-1.0, 0.0));
        q.t1_ns = 1000.0;
        let noise = NoiseModel::without_crosstalk(vec![q]);
        let mut cfg = config(1, 10_000, SimMode::Demultiplexed);
        cfg.duration_ns = 1000.0;
        cfg.dt_ns = 100.0;
        let ds = generate(&cfg, &noise).unwrap();
        let excited: Vec<usize> = (0..ds.num_shots()).filter(|&s| ds.bit(s, 0) == 1).collect();
        let relaxed = excited.iter().filter(|&&s| ds.event(s, 0).is_some()).count();
        let p = 1.0 - (-1.0f64).exp();
        let n = excited.len() as f64;
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!((relaxed as f64 - n * p).abs() < 4.0 * sd, "relaxed {relaxed} of {n}");
    }

    #[test]
    fn same_seed_same_dataset_and_prefix_stability() {
        let mut q = qubit((1.0, 0.0), (-1.0, 0.0));
        q.noise_sigma = 0.5;
        q.t1_ns = 2000.0;
        let noise = NoiseModel::without_crosstalk(vec![q]);
        let a = generate(&config(1, 30, SimMode::Demultiplexed), &noise).unwrap();
        let b = generate(&config(1, 30, SimMode::Demultiplexed), &noise).unwrap();
        assert_eq!(a, b);
        let c = generate(&config(1, 40, SimMode::Demultiplexed), &noise).unwrap();
        // shot k of state 0 is identical regardless of the total count.
        for k in 0..30 {
            assert_eq!(a.trace(k, 0), c.trace(k, 0));
            assert_eq!(a.trace(30 + k, 0), c.trace(40 + k, 0));
        }
    }

    #[test]
    fn degenerate_and_invalid_models_rejected() {
        let noise = NoiseModel::without_crosstalk(vec![qubit((1.0, 1.0), (1.0, 1.0))]);
        assert!(matches!(
            generate(&config(1, 1, SimMode::Demultiplexed), &noise),
            Err(Error::DegenerateModel(_))
        ));
        let mut bad = NoiseModel::without_crosstalk(vec![qubit((0.0, 0.0), (1.0, 0.0)), qubit((0.0, 0.0), (1.0, 0.0))]);
        bad.crosstalk[0][1] = 1.5;
        assert!(bad.validate().is_err());
        let mut q = qubit((0.0, 0.0), (1.0, 0.0));
        q.excitation_prob = 0.5;
        assert!(NoiseModel::without_crosstalk(vec![q]).validate().is_err());
    }

    #[test]
    fn colliding_frequencies_rejected() {
        let mut a = qubit((0.0, 0.0), (1.0, 0.0));
        let mut b = a.clone();
        a.if_freq_mhz = 50.0;
        b.if_freq_mhz = 51.0;
        let noise = NoiseModel::without_crosstalk(vec![a, b]);
        assert!(matches!(
            generate(&config(2, 1, SimMode::Composite), &noise),
            Err(Error::FrequencyCollision { .. })
        ));
    }

    #[test]
    fn single_qubit_baseband_composite_is_identity() {
        let noise = NoiseModel::without_crosstalk(vec![qubit((0.0, 0.0), (1.0, 0.0))]);
        let tr = Trace::new(vec![0.5, -1.0, 2.0], vec![0.25, 0.0, -3.0], 2.0).unwrap();
        let out = compose_multiplexed(std::slice::from_ref(&tr), &noise).unwrap();
        assert_eq!(out, tr);
    }

    #[test]
    fn compose_rejects_mismatched_lengths() {
        let noise = NoiseModel::without_crosstalk(vec![qubit((0.0, 0.0), (1.0, 0.0)), qubit((0.0, 0.0), (1.0, 0.0))]);
        let a = Trace::new(vec![0.0; 3], vec![0.0; 3], 2.0).unwrap();
        let b = Trace::new(vec![0.0; 4], vec![0.0; 4], 2.0).unwrap();
        assert!(matches!(compose_multiplexed(&[a, b], &noise), Err(Error::LengthMismatch { .. })));
    }

    fn ramp_envelope(amp: Complex64, tau: f64, len: usize) -> Trace {
        let z: Vec<Complex64> = (0..len).map(|t| amp * (1.0 - (-(t as f64) * 2.0 / tau).exp())).collect();
        Trace::from_complex(&z, 2.0).unwrap()
    }

    fn rms_error(a: &Trace, b: &Trace, range: std::ops::Range<usize>) -> f64 {
        let n = range.len() as f64;
        let err: f64 = range.clone().map(|t| (a.sample(t) - b.sample(t)).norm_sqr()).sum::<f64>() / n;
        let scale: f64 = range.map(|t| b.sample(t).norm_sqr()).sum::<f64>() / n;
        (err / scale).sqrt()
    }

    #[test]
    fn two_tone_round_trip_recovers_envelopes() {
        let mut a = qubit((0.0, 0.0), (1.0, 0.0));
        let mut b = a.clone();
        a.if_freq_mhz = -50.0;
        b.if_freq_mhz = 25.0;
        let noise = NoiseModel::without_crosstalk(vec![a, b]);
        let env_a = ramp_envelope(Complex64::new(1.0, 0.5), 150.0, 500);
        let env_b = ramp_envelope(Complex64::new(-0.4, 0.8), 150.0, 500);
        let comp = compose_multiplexed(&[env_a.clone(), env_b.clone()], &noise).unwrap();
        let rec_a = demultiplex(&comp, -50.0, 20).unwrap();
        let rec_b = demultiplex(&comp, 25.0, 20).unwrap();
        assert!(rms_error(&rec_a, &env_a, 10..490) < 0.01);
        assert!(rms_error(&rec_b, &env_b, 10..490) < 0.01);
    }

    #[test]
    fn crosstalk_leaks_scaled_envelope() {
        let mut a = qubit((0.0, 0.0), (1.0, 0.0));
        let mut b = a.clone();
        a.if_freq_mhz = -50.0;
        b.if_freq_mhz = 25.0;
        let mut noise = NoiseModel::without_crosstalk(vec![a, b]);
        noise.crosstalk[0][1] = 0.1;
        let env_a = ramp_envelope(Complex64::new(1.0, 0.5), 150.0, 500);
        let env_b = ramp_envelope(Complex64::new(-0.4, 0.8), 150.0, 500);
        let comp = compose_multiplexed(&[env_a.clone(), env_b.clone()], &noise).unwrap();
        let rec_a = demultiplex(&comp, -50.0, 20).unwrap();
        // Direct mixing oracle: qubit 0 sees env_a + 0.1 env_b.
        let oracle = Trace::from_complex(
            &(0..500).map(|t| env_a.sample(t) + env_b.sample(t) * 0.1).collect::<Vec<_>>(),
            2.0,
        )
        .unwrap();
        assert!(rms_error(&rec_a, &oracle, 10..490) < 0.01);
        assert!(rms_error(&rec_a, &env_a, 10..490) > 0.05);
    }

    #[test]
    fn noiseless_class_mtvs_are_two_points() {
        let noise = NoiseModel::without_crosstalk(vec![qubit((1.0, 0.0), (-1.0, 0.5))]);
        let ds = generate(&config(1, 5, SimMode::Demultiplexed), &noise).unwrap();
        let mtvs: Vec<_> = (0..ds.num_shots()).map(|s| mean_trace_value(&ds.trace(s, 0)).unwrap()).collect();
        for s in 1..5 {
            assert_eq!(mtvs[s], mtvs[0]);
            assert_eq!(mtvs[5 + s], mtvs[5]);
        }
        assert!(mtvs[0].distance(&mtvs[5]) > 1.0);
    }

    #[test]
    fn relaxed_trace_returns_to_ground() {
        let mut m = qubit((0.0, 0.0), (2.0, 0.0));
        m.ring_up_tau_ns = 50.0;
        let ev = TransitionEvent {
            kind: TransitionKind::Relaxation,
            time_ns: 300.0,
        };
        let before = m.response(1, Some(ev), 299.0);
        assert!((before.re - 2.0 * (1.0 - (-299.0f64 / 50.0).exp())).abs() < 1e-12);
        let late = m.response(1, Some(ev), 1000.0);
        assert!(late.norm() < 1e-5);
    }
}
