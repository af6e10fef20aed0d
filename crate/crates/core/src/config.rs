//! TOML run configuration shared by the command-line tool and the benchmarks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_SATURATION_EPSILON;
use crate::pipeline::{PipelineConfig, PipelineKind};
use crate::sim::{NoiseModel, QubitModel, SimConfig};

/// The frozen three-qubit reference configuration.
pub const REFERENCE_TOML: &str = include_str!("../configs/ref3q.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Row `q` holds the weights of every qubit's response in qubit `q`'s
    /// channel; omitted means no crosstalk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crosstalk: Option<Vec<Vec<f64>>>,
    pub qubits: Vec<QubitModel>,
}

impl NoiseSection {
    pub fn model(&self) -> NoiseModel {
        match &self.crosstalk {
            Some(c) => NoiseModel {
                qubits: self.qubits.clone(),
                crosstalk: c.clone(),
            },
            None => NoiseModel::without_crosstalk(self.qubits.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub ratios: [f64; 3],
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            ratios: [0.195, 0.105, 0.70],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Durations, in bins, for the duration sweep.
    pub durations: Vec<usize>,
    pub saturation_epsilon: f64,
    /// Training-set sizes for the training-size sweep.
    pub train_sizes: Vec<usize>,
    /// Pipeline kinds trained by the full recipe.
    pub kinds: Vec<PipelineKind>,
    pub quant_bits: u32,
    /// Fraction of the readout window in which a relaxation counts as
    /// detectable when scoring the relaxation labels.
    pub relax_window_fraction: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            durations: Vec::new(),
            saturation_epsilon: DEFAULT_SATURATION_EPSILON,
            train_sizes: Vec::new(),
            kinds: vec![PipelineKind::Mf, PipelineKind::MfNn, PipelineKind::MfRmfNn],
            quant_bits: 16,
            relax_window_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; drives simulation, splitting and training.
    pub seed: u64,
    pub sim: SimConfig,
    pub noise: NoiseSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut c: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        c.set_seed(c.seed);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn reference() -> Self {
        Self::from_toml(REFERENCE_TOML).expect("reference config is valid")
    }

    /// Sets the master seed and every derived seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.sim.seed = seed;
        self.pipeline.seed = seed;
        self.pipeline.train.seed = seed;
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise.model()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let noise = self.noise_model();
        noise.validate()?;
        if noise.num_qubits() != self.sim.num_qubits {
            return Err(Error::InvalidConfig(format!(
                "sim.num_qubits is {} but {} qubit models are given",
                self.sim.num_qubits,
                noise.num_qubits()
            )));
        }
        let bins = self.sim.bins()?;
        if let Some(&d) = self.eval.durations.iter().find(|&&d| d == 0 || d > bins) {
            return Err(Error::InvalidWindow { window: d, max: bins });
        }
        if !(0.0..=1.0).contains(&self.eval.relax_window_fraction) {
            return Err(Error::InvalidConfig("eval.relax_window_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Checks that `ds` has the shape this configuration produces.
    pub fn check_dataset(&self, ds: &LabeledDataset) -> Result<()> {
        if ds.num_qubits() != self.sim.num_qubits || ds.bins() != self.sim.bins()? {
            return Err(Error::InvalidConfig(format!(
                "dataset has {} qubits x {} bins, config describes {} x {}",
                ds.num_qubits(),
                ds.bins(),
                self.sim.num_qubits,
                self.sim.bins()?
            )));
        }
        Ok(())
    }
}
