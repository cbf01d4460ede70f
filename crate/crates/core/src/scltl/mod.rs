//! Co-safe temporal formulas and their progression automata.

mod formula;
mod fsa;
mod parser;

pub use formula::{Formula, Observation};
pub use fsa::{Fsa, DEFAULT_STATE_CAP};
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScltlError {
    #[error("parse error at {position}: {message}")]
    Parse { message: String, position: usize },
    #[error("invalid observation name '{0}'")]
    InvalidObservation(String),
    #[error("observation '{0}' is not in the automaton alphabet")]
    UnknownLetter(String),
    #[error("automaton exceeds {0} states")]
    StateCapExceeded(usize),
}
