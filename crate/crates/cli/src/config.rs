//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sihg::analysis::{RateMode, Sampler};
use sihg::nn::{AttackConfig, TrainConfig, TrainMethod};
use sihg::zoo::ProblemSpec;
use sihg::SolverConfig;

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Solver(SolverExperiment),
    Training(TrainingExperiment),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverName {
    Ssihg,
    Dsihg,
    Msihg,
    MsihgGd,
    Spdhg,
    Mgda,
}

impl SolverName {
    pub fn name(&self) -> &'static str {
        match self {
            SolverName::Ssihg => "ssihg",
            SolverName::Dsihg => "dsihg",
            SolverName::Msihg => "msihg",
            SolverName::MsihgGd => "msihg_gd",
            SolverName::Spdhg => "spdhg",
            SolverName::Mgda => "mgda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverExperiment {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Every listed solver is run from the same start with the same seed.
    pub solvers: Vec<SolverName>,
    pub problem: ProblemSpec,
    pub solver: SolverConfig,
    #[serde(default)]
    pub params: SolverParams,
    #[serde(default)]
    pub metrics: MetricOptions,
    #[serde(default)]
    pub output: OutputOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Heavy-ball momentum for `msihg_gd`.
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    /// Ascent steps per iteration for `mgda`.
    #[serde(default = "default_inner_steps")]
    pub inner_steps: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            momentum: default_momentum(),
            inner_steps: default_inner_steps(),
        }
    }
}

fn default_momentum() -> f64 {
    0.9
}
fn default_inner_steps() -> usize {
    10
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    /// Record wall time; when false `elapsed_ns` is written as 0 so traces
    /// are byte-reproducible.
    #[serde(default = "default_true")]
    pub timing: bool,
    #[serde(default = "default_true")]
    pub plot: bool,
    /// Weak-MVI constant used by the admissibility report and the budget check.
    #[serde(default)]
    pub rho: f64,
    /// Strong-MVI constant used for the linear-rate `θ`.
    #[serde(default)]
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateOptions>,
    /// Run the telescoped budget check on `dsihg` traces.
    #[serde(default)]
    pub budget: bool,
    /// Settings for `check mvi` and `check identities`.
    #[serde(default)]
    pub check: CheckOptions,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            timing: true,
            plot: true,
            rho: 0.0,
            mu: 0.0,
            rate: None,
            budget: false,
            check: CheckOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    pub mode: RateMode,
    /// Number of trailing metric points used by the fit.
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    #[serde(default = "default_sampler")]
    pub sampler: Sampler,
    /// Random instances for `check identities`.
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            sampler: default_sampler(),
            instances: default_instances(),
            seed: 0,
        }
    }
}

fn default_sampler() -> Sampler {
    Sampler::GridAndUniform {
        per_axis: 21,
        samples: 20_000,
    }
}
fn default_instances() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutputOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExperiment {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub eps: f64,
    pub methods: Vec<TrainMethod>,
    #[serde(default)]
    pub data: DataOptions,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    pub train: TrainConfig,
    /// Final evaluation attack, run on the held-out set.
    pub attack: AttackConfig,
    /// The absolute `(ε, τ, T)` these ratios were taken from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSetting>,
    #[serde(default = "default_true")]
    pub timing: bool,
    #[serde(default)]
    pub output: OutputOptions,
}

fn default_hidden() -> usize {
    16
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataOptions {
    pub per_class: usize,
    pub train_seed: u64,
    pub test_seed: u64,
}

impl Default for DataOptions {
    fn default() -> Self {
        Self {
            per_class: 100,
            train_seed: 0,
            test_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSetting {
    pub dataset: String,
    pub eps: f64,
    pub tau: f64,
    pub steps: usize,
}

impl Experiment {
    pub fn name(&self) -> &str {
        match self {
            Experiment::Solver(e) => &e.name,
            Experiment::Training(e) => &e.name,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Experiment::Solver(e) => e.solver.seed,
            Experiment::Training(e) => e.train.seed,
        }
    }

    pub fn output(&self) -> &OutputOptions {
        match self {
            Experiment::Solver(e) => &e.output,
            Experiment::Training(e) => &e.output,
        }
    }

    pub fn output_mut(&mut self) -> &mut OutputOptions {
        match self {
            Experiment::Solver(e) => &mut e.output,
            Experiment::Training(e) => &mut e.output,
        }
    }

    pub fn set_timing(&mut self, on: bool) {
        match self {
            Experiment::Solver(e) => e.metrics.timing = on,
            Experiment::Training(e) => e.timing = on,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// SHA-256 of the canonical serialization, excluding the output
    /// directory so relocating a run keeps its hash.
    pub fn hash(&self) -> Result<String> {
        let mut canon = self.clone();
        canon.output_mut().dir = None;
        let digest = Sha256::digest(canon.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
