//! Safe learning and controller synthesis for stochastic systems with
//! partially unknown dynamics.
//!
//! The unknown part of the dynamics is learned with Gaussian-process
//! regression. Its high-confidence error bounds feed an interval MDP
//! abstraction over a grid partition, which is composed with an automaton
//! for a co-safe temporal specification and model checked. Exploration is
//! restricted to parts of the product that cannot violate the
//! specification.

pub mod abstraction;
pub mod checker;
pub mod config;
pub mod explorer;
pub mod gp;
pub mod model;
pub mod scltl;
pub mod sim;
