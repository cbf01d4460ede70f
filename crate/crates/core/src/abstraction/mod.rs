//! Grid partitions, GP error bounds and interval MDP construction.

mod bounds;
mod imdp;
mod noise;
mod partition;

pub use bounds::{controller_offset, extreme_points, region_error_bound, transition_interval};
pub use imdp::{
    build_imdp, build_imdp_with_bounds, error_bounds, repair_row, AbstractionOptions, Imdp,
    ImdpAction, Successor,
};
pub(crate) use imdp::check_row;
pub use noise::NoiseModel;
pub use partition::{BoundaryMode, BoxDomain, Partition, Region};

use crate::gp::GpError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AbstractionError {
    #[error("{0}")]
    Invalid(String),
    #[error("infeasible interval row at state {state}, action {target:?}")]
    Infeasible { state: usize, target: Option<usize> },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Gp(#[from] GpError),
}
