//! Gaussian-process regression of the unknown dynamics.

mod dataset;
mod exact;
mod kernel;
mod sparse;

pub use dataset::Dataset;
pub use exact::GpModel;
pub use kernel::SqExpKernel;
pub use sparse::{farthest_point_indices, SparseGpModel};

/// Lower Cholesky factor of a unit-diagonal correlation matrix, with the
/// same jitter schedule as model fitting.
pub(crate) fn correlation_cholesky(c: &nalgebra::DMatrix<f64>) -> Result<nalgebra::DMatrix<f64>, GpError> {
    Ok(exact::jittered_cholesky(c, 1.0)?.l())
}

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("matrix not positive definite after jitter up to {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },
    #[error("non-finite value in dataset")]
    NonFinite,
    #[error("sparse model needs at least one sample")]
    EmptyDataset,
    #[error("dataset csv: {0}")]
    Csv(String),
}

/// Posterior at one query point. All outputs share the variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: Vec<f64>,
    pub variance: f64,
}

impl Prediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Multi-output regressor: exact below the inducing budget, sparse above it.
#[derive(Debug, Clone)]
pub enum Regressor {
    Exact(GpModel),
    Sparse(SparseGpModel),
}

impl Regressor {
    /// Fit exact regression when `inducing` is `None` or the dataset is no
    /// larger than the inducing budget.
    pub fn fit(
        data: &Dataset,
        kernel: SqExpKernel,
        noise_variance: f64,
        inducing: Option<usize>,
    ) -> Result<Self, GpError> {
        match inducing {
            Some(eta) if data.len() > eta => {
                SparseGpModel::fit(data, eta, kernel, noise_variance).map(Regressor::Sparse)
            }
            _ => GpModel::fit(data, kernel, noise_variance).map(Regressor::Exact),
        }
    }

    pub fn prior(input_dim: usize, output_dim: usize, kernel: SqExpKernel, noise_variance: f64) -> Result<Self, GpError> {
        GpModel::fit(&Dataset::new(input_dim, output_dim), kernel, noise_variance).map(Regressor::Exact)
    }

    pub fn predict(&self, z: &[f64]) -> Result<Prediction, GpError> {
        match self {
            Regressor::Exact(g) => g.predict(z),
            Regressor::Sparse(g) => g.predict(z),
        }
    }

    pub fn variance(&self, z: &[f64]) -> Result<f64, GpError> {
        match self {
            Regressor::Exact(g) => g.variance(z),
            Regressor::Sparse(g) => g.variance(z),
        }
    }

    pub fn kernel(&self) -> &SqExpKernel {
        match self {
            Regressor::Exact(g) => g.kernel(),
            Regressor::Sparse(g) => g.kernel(),
        }
    }

    pub fn num_samples(&self) -> usize {
        match self {
            Regressor::Exact(g) => g.num_samples(),
            Regressor::Sparse(g) => g.num_samples(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Regressor::Sparse(_))
    }
}

/// Constants of the high-confidence scaling formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaParams {
    /// Sub-Gaussian noise parameter.
    pub sigma_nu: f64,
    /// Confidence parameter in (0, 1].
    pub delta: f64,
    /// Information-gain constant.
    pub info_gain: f64,
    /// RKHS norm bound of the unknown function.
    pub rkhs_bound: f64,
}

impl BetaParams {
    pub fn validate(&self) -> Result<(), GpError> {
        let ok = self.sigma_nu > 0.0
            && self.delta > 0.0
            && self.delta <= 1.0
            && self.info_gain >= 0.0
            && self.rkhs_bound >= 0.0
            && [self.sigma_nu, self.delta, self.info_gain, self.rkhs_bound]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(GpError::InvalidHyperparameter(format!("bad beta parameters {self:?}")))
        }
    }
}

/// Scaling factor applied to the posterior standard deviation.
///
/// With `m = 0` the sample-count factor is taken at its `m -> inf` limit,
/// the largest value the formula can produce.
pub fn beta_bound(p: &BetaParams, m: usize) -> f64 {
    let shrink = if m == 0 {
        1.0
    } else {
        (1.0 + 2.0 / m as f64).sqrt().recip()
    };
    let root = (2.0 * (p.info_gain + 1.0 + (1.0 / p.delta).ln())).sqrt();
    p.sigma_nu * shrink * (p.rkhs_bound + p.sigma_nu * root)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMode {
    Fixed(f64),
    Formula(BetaParams),
}

impl BetaMode {
    pub fn value(&self, m: usize) -> f64 {
        match self {
            BetaMode::Fixed(b) => *b,
            BetaMode::Formula(p) => beta_bound(p, m),
        }
    }
}
