//! Interval value iteration and end-component analysis on products.

mod mec;
mod value;

pub use mec::{mec_decompose, Mec};
pub use value::{
    almost_sure, can_reach, evaluate_policy, extremal_distribution, extremal_expectation,
    value_iterate, value_iterates, AdversaryMode, CheckerOptions, Policy, ValueVector,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckError {
    #[error("value iteration did not converge after {sweeps} sweeps (residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },
    #[error("{0}")]
    Invalid(String),
}
