//! Experiment configuration, read from a TOML file.
//!
//! ```toml
//! [model]
//! a = 1.0
//! mu = 4.0
//! chi = 0.5
//!
//! [grid]
//! extents = [16.0]      # one entry per axis; the dimension N follows from it
//! cells = [256]
//!
//! [step]                # any StepControl field, all optional
//! dt_init = 1e-3
//!
//! [run]
//! horizon = 50.0
//! sample_every = 0.1
//! convergence_tol = 1e-6
//!
//! [initial.u]
//! kind = "random-fourier"
//! seed = 7
//! modes = 3
//! offset = 0.25
//! amplitude = 0.0125
//!
//! [initial.v]
//! kind = "constant"
//! value = 0.25
//!
//! [output]
//! dir = "out"
//! prefix = "run"
//!
//! [sweep]               # only read by `sweep`; omitted axes keep [model]
//! mu = [1.0, 2.0, 4.0, 8.0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsSpec;
use crate::error::{Error, Result};
use crate::grid::{Grid, InterfaceMean};
use crate::integrator::{Schedule, StepControl};
use crate::model::Params;
use crate::runner::initial::InitialSpec;

pub const DEFAULT_HORIZON: f64 = 50.0;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub a: f64,
    pub mu: f64,
    pub chi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub extents: Vec<f64>,
    pub cells: Vec<usize>,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

fn default_sample_every() -> f64 {
    0.1
}

fn default_convergence_tol() -> Option<f64> {
    Some(DEFAULT_CONVERGENCE_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: f64,
    /// Set to 0 to disable early stopping.
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: Option<f64>,
    #[serde(default)]
    pub snapshot_stride: Option<usize>,
    #[serde(default)]
    pub eta0_override: Option<f64>,
    #[serde(default)]
    pub l_choice: Option<f64>,
    #[serde(default)]
    pub interface_mean: InterfaceMean,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            horizon: DEFAULT_HORIZON,
            sample_every: default_sample_every(),
            convergence_tol: default_convergence_tol(),
            snapshot_stride: None,
            eta0_override: None,
            l_choice: None,
            interface_mean: InterfaceMean::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_prefix() -> String {
    "run".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            prefix: default_prefix(),
        }
    }
}

/// Parameter axes of a sweep; an empty axis keeps the `[model]` value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub chi: Vec<f64>,
    #[serde(default)]
    pub mu: Vec<f64>,
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

fn default_parallel() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    #[serde(default)]
    pub step: StepControl,
    #[serde(default)]
    pub run: RunSection,
    pub initial: InitialSpec,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.params()?;
        self.step.validate()?;
        if !(self.run.horizon > 0.0 && self.run.sample_every > 0.0) {
            return Err(Error::Config(
                "run.horizon and run.sample_every must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(&self.grid.extents, &self.grid.cells)
    }

    pub fn params(&self) -> Result<Params> {
        Params::new(
            self.model.a,
            self.model.mu,
            self.model.chi,
            self.grid.extents.len(),
        )
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            horizon: self.run.horizon,
            sample_every: self.run.sample_every,
            convergence_tol: self.run.convergence_tol.filter(|&t| t > 0.0),
            snapshot_stride: self.run.snapshot_stride,
        }
    }

    pub fn diagnostics(&self, params: &Params) -> DiagnosticsSpec {
        DiagnosticsSpec {
            eta0_override: self.run.eta0_override,
            l_choice: self.run.l_choice,
            ..DiagnosticsSpec::for_params(params)
        }
    }

    pub fn output_path(&self, suffix: &str) -> PathBuf {
        self.output
            .dir
            .join(format!("{}_{}", self.output.prefix, suffix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[model]
a = 1.0
mu = 2.0
chi = 0.5

[grid]
extents = [16.0]
cells = [64]

[step]
dt_init = 1e-4

[run]
horizon = 1.0

[initial.u]
kind = "constant"
value = 0.2

[initial.v]
kind = "random-fourier"
seed = 7
modes = 3
offset = 1.0
amplitude = 0.3
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.params().unwrap().dim, 1);
        assert_eq!(c.step.dt_init, 1e-4);
        assert_eq!(c.step.cfl_diff, 0.2);
        assert_eq!(c.run.sample_every, 0.1);
        assert_eq!(c.run.convergence_tol, Some(DEFAULT_CONVERGENCE_TOL));
        assert_eq!(c.output.prefix, "run");
        assert!(c.sweep.is_none());
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = SAMPLE.replace("mu = 2.0", "mu = -2.0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = SAMPLE.replace("cells = [64]", "cells = [2]");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = SAMPLE.replace("[model]", "[modle]");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(Error::Toml(_))
        ));
    }

    #[test]
    fn missing_file_is_a_config_error() {
        assert!(matches!(
            ExperimentConfig::load(Path::new("/nonexistent/config.toml")),
            Err(Error::Config(_))
        ));
    }
}
