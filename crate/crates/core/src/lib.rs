//! Single-shot superconducting qubit readout discrimination.
//!
//! The crate covers the whole chain from raw IQ readout traces to per-qubit
//! state assignments:
//!
//! * [`trace`] and [`dataset`]: traces, labeled multi-qubit datasets,
//!   stratified splits and the `rdfmt-1` on-disk format;
//! * [`sim`]: a synthetic frequency-multiplexed readout simulator with
//!   relaxation / excitation ground truth;
//! * [`dsp`]: demultiplexing, boxcar filtering and matched filters;
//! * [`relaxation`]: mean-trace-value relaxation labeling and the relaxation
//!   matched filter;
//! * [`neural`]: the small feed-forward classifier and its fixed-point form;
//! * [`pipeline`]: the composed discriminators (`mf`, `mf_nn`, `mf_rmf_nn`,
//!   `raw_fnn`) with truncated-duration inference;
//! * [`metrics`]: accuracy reports and duration / training-size sweeps;
//! * [`config`]: the TOML run configuration shared by the CLI.


pub mod dataset;
pub mod config;
pub mod dsp;
pub mod metrics;
pub mod error;

pub mod neural;
pub mod pipeline;

pub mod relaxation;
pub mod rng;
pub mod sim;
mod sum;
pub mod trace;

pub use error::{Error, Result};
