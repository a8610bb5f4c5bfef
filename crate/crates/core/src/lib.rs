//! Metric-free exploration and topological mapping in a deterministic gridworld.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: a small 64-bit neural kernel (dense stacks, LSTM with BPTT, Adam).
//! - [`world`]: occupancy/texture grid, kinematics, ray-cast panoramas, coverage.
//! - [`expert`]: anchor sampling and expert demonstrations.
//! - [`model`]: feature encoder, task/motion planners, action assigner, training.
//! - [`explore`]: exploration episodes and the random-walk baseline.
//! - [`topo`]: chain graphs, VLAD place recognition, ball tree, loop closing.
//! - [`nav`]: localisation, Dijkstra routing, route execution, SPL evaluation.

pub mod error;
pub mod expert;
pub mod explore;
pub mod model;
pub mod nav;
pub mod nn;
pub mod rng;
pub mod topo;
pub mod world;

pub use error::{Error, Result};
pub use world::{Action, Locomotion, Observation, Pose, World};
