//! Experiment configuration, read from TOML.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::abstraction::{AbstractionOptions, BoundaryMode, BoxDomain, NoiseModel, Partition};
use crate::checker::CheckerOptions;
use crate::gp::{BetaMode, BetaParams, SqExpKernel};
use crate::scltl::{self, Formula, Observation};
use crate::sim::{GroundTruth, KnownDynamics};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Syntax(String),
    #[error("invalid `{field}`: {message}")]
    Field { field: &'static str, message: String },
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub labels: LabelsConfig,
    pub specification: SpecificationConfig,
    pub noise: NoiseConfig,
    pub kernel: KernelConfig,
    pub ground_truth: GroundTruthConfig,
    pub learning: LearningConfig,
    #[serde(default)]
    pub exploration: ExplorationConfig,
    #[serde(default)]
    pub checker: CheckerConfig,
    pub seeds: SeedsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub divisions: Vec<usize>,
    #[serde(default)]
    pub boundary: BoundaryMode,
    pub initial_state: Vec<f64>,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DynamicsConfig {
    #[default]
    Identity,
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsConfig {
    #[serde(default)]
    pub cells: Vec<LabelCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelCell {
    pub cell: Vec<usize>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecificationConfig {
    pub formula: String,
    pub p_sat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub sigma_g: f64,
    pub length_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthConfig {
    pub support: f64,
    #[serde(default = "default_grid_density")]
    pub grid_density: usize,
}

fn default_grid_density() -> usize {
    50
}

/// Either a fixed number or the parameters of the sample-count formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaConfig {
    Fixed(f64),
    Formula(BetaParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningConfig {
    pub beta: BetaConfig,
    /// Sparse approximation kicks in above this many samples.
    #[serde(default)]
    pub inducing_points: Option<usize>,
    /// Defaults to the noise sigma squared.
    #[serde(default)]
    pub noise_variance: Option<f64>,
    #[serde(default = "default_error_samples")]
    pub error_samples_per_axis: usize,
    #[serde(default)]
    pub clip_offsets_to_domain: bool,
}

fn default_error_samples() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplorationConfig {
    pub steps_per_iteration: usize,
    pub max_iterations: usize,
    pub stay_action: bool,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            steps_per_iteration: 250,
            max_iterations: 40,
            stay_action: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckerConfig {
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// Slack used when comparing probabilities against thresholds.
    pub probability_tolerance: f64,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_sweeps: 10_000,
            probability_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsConfig {
    pub ground_truth: u64,
    pub noise: u64,
    pub exploration: u64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn with_seeds(&self, seeds: SeedsConfig) -> Self {
        Self {
            seeds,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.system.lower.len();
        if n == 0 {
            return Err(field("system.lower", "at least one dimension required"));
        }
        if self.system.upper.len() != n {
            return Err(field("system.upper", "length differs from system.lower"));
        }
        if self.system.divisions.len() != n || self.system.divisions.contains(&0) {
            return Err(field("system.divisions", "one positive count per dimension required"));
        }
        self.domain()?;
        if self.system.initial_state.len() != n {
            return Err(field("system.initial_state", "dimension mismatch"));
        }
        if !self.domain()?.contains(&self.system.initial_state) {
            return Err(field("system.initial_state", "must lie inside the domain"));
        }
        self.known_dynamics()
            .validate(n)
            .map_err(|e| field("system.dynamics", e.to_string()))?;
        self.partition()?;
        self.formula()?;
        if !(self.specification.p_sat > 0.0 && self.specification.p_sat <= 1.0) {
            return Err(field("specification.p_sat", "must lie in (0, 1]"));
        }
        if !(self.noise.sigma.is_finite() && self.noise.sigma > 0.0) {
            return Err(field("noise.sigma", "must be positive"));
        }
        if !(self.noise.support.is_finite() && self.noise.support >= 0.0) {
            return Err(field("noise.support", "must be non-negative"));
        }
        self.kernel()?;
        if !(self.ground_truth.support.is_finite() && self.ground_truth.support >= 0.0) {
            return Err(field("ground_truth.support", "must be non-negative"));
        }
        if self.ground_truth.grid_density < 2 {
            return Err(field("ground_truth.grid_density", "must be at least 2"));
        }
        match &self.learning.beta {
            BetaConfig::Fixed(b) if !(b.is_finite() && *b >= 0.0) => {
                return Err(field("learning.beta", "must be non-negative"));
            }
            BetaConfig::Formula(p) => p.validate().map_err(|e| field("learning.beta", e.to_string()))?,
            _ => {}
        }
        if self.learning.inducing_points == Some(0) {
            return Err(field("learning.inducing_points", "must be positive"));
        }
        if let Some(v) = self.learning.noise_variance {
            if !(v.is_finite() && v > 0.0) {
                return Err(field("learning.noise_variance", "must be positive"));
            }
        }
        if self.learning.error_samples_per_axis == 0 {
            return Err(field("learning.error_samples_per_axis", "must be positive"));
        }
        if self.exploration.steps_per_iteration == 0 {
            return Err(field("exploration.steps_per_iteration", "must be at least 1"));
        }
        if !(self.checker.epsilon.is_finite() && self.checker.epsilon > 0.0) {
            return Err(field("checker.epsilon", "must be positive"));
        }
        if self.checker.max_sweeps == 0 {
            return Err(field("checker.max_sweeps", "must be positive"));
        }
        if !(self.checker.probability_tolerance >= 0.0 && self.checker.probability_tolerance < 1.0) {
            return Err(field("checker.probability_tolerance", "must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.system.lower.len()
    }

    pub fn domain(&self) -> Result<BoxDomain, ConfigError> {
        BoxDomain::new(self.system.lower.clone(), self.system.upper.clone())
            .map_err(|e| field("system.lower", e.to_string()))
    }

    pub fn partition(&self) -> Result<Partition, ConfigError> {
        let mut labels = HashMap::new();
        for c in &self.labels.cells {
            let o = Observation::new(&c.label).map_err(|e| field("labels.cells", e.to_string()))?;
            if labels.insert(c.cell.clone(), o).is_some() {
                return Err(field("labels.cells", format!("cell {:?} labeled twice", c.cell)));
            }
        }
        Partition::new(
            self.domain()?,
            self.system.divisions.clone(),
            &labels,
            self.system.boundary,
        )
        .map_err(|e| field("labels.cells", e.to_string()))
    }

    pub fn formula(&self) -> Result<Formula, ConfigError> {
        scltl::parse(&self.specification.formula)
            .map_err(|e| field("specification.formula", e.to_string()))
    }

    pub fn kernel(&self) -> Result<SqExpKernel, ConfigError> {
        SqExpKernel::new(self.kernel.sigma_g, self.kernel.length_scale)
            .map_err(|e| field("kernel", e.to_string()))
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel::isotropic(self.dim(), self.noise.sigma, self.noise.support)
            .expect("validated noise parameters")
    }

    pub fn gp_noise_variance(&self) -> f64 {
        self.learning
            .noise_variance
            .unwrap_or(self.noise.sigma * self.noise.sigma)
    }

    pub fn beta(&self) -> BetaMode {
        match &self.learning.beta {
            BetaConfig::Fixed(b) => BetaMode::Fixed(*b),
            BetaConfig::Formula(p) => BetaMode::Formula(*p),
        }
    }

    pub fn known_dynamics(&self) -> KnownDynamics {
        match &self.system.dynamics {
            DynamicsConfig::Identity => KnownDynamics::Identity,
            DynamicsConfig::Affine { matrix, offset } => KnownDynamics::Affine {
                matrix: matrix.clone(),
                offset: offset.clone(),
            },
        }
    }

    pub fn abstraction_options(&self) -> AbstractionOptions {
        AbstractionOptions {
            samples_per_axis: self.learning.error_samples_per_axis,
            stay_action: self.exploration.stay_action,
            clip_offsets_to_domain: self.learning.clip_offsets_to_domain,
        }
    }

    pub fn checker_options(&self) -> CheckerOptions {
        CheckerOptions {
            epsilon: self.checker.epsilon,
            max_sweeps: self.checker.max_sweeps,
        }
    }

    /// The simulated plant described by this configuration.
    pub fn ground_truth(&self) -> Result<GroundTruth, ConfigError> {
        GroundTruth::new(
            self.domain()?,
            self.system.boundary,
            self.known_dynamics(),
            &self.kernel()?,
            self.ground_truth.support,
            self.ground_truth.grid_density,
            self.noise_model(),
            self.seeds.ground_truth,
            self.seeds.noise,
        )
        .map_err(|e| field("ground_truth", e.to_string()))
    }
}
