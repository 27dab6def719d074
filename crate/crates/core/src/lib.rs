//! Simulation of network slice placement onto a shared physical substrate.
//!
//! Provides the substrate and request model, a greedy placement heuristic,
//! an exact branch-and-bound solver, the placement environment, and an
//! actor-critic agent that can be steered by the heuristic.

pub mod agent;
pub mod config;
pub mod env;
pub mod error;
pub mod fixture;
pub mod harness;
pub mod heuristic;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod workload;

pub use error::{Error, Result};
