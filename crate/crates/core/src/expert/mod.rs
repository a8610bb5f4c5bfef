//! Expert demonstrations: anchors over navigable space, visited greedily by
//! geodesic proximity and reached by shortest action paths.

mod anchors;
mod demo;
mod planner;

pub use anchors::{reachable_mask, sample_anchors, AnchorSet, DEFAULT_SPACING};
pub use demo::{generate_demonstration, read_demonstration, write_demonstration, Demonstration};
pub use planner::{plan_to_cell, replay};

pub(crate) use demo::{parse_header, parse_observation, take, write_observation};
