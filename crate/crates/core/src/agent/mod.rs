//! Actor-critic agent with an optional heuristic shaping layer.

pub mod a2c;
pub mod checkpoint;
pub mod net;
pub mod policy;

pub use a2c::{compute_gradients, discounted_returns, losses, Agent, AgentParams, Diagnostics, Hyper, Trajectory, TrajectoryStep};
pub use net::{Activation, Adam, Dense, DenseNet};
pub use policy::{heuristic_shaping, policy_forward, sample_action, ActionDistribution};
