//! Config parsing, artifact store, pipeline stages and rendering for the
//! `topowalk` binary.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod render;
pub mod stage;
pub mod stats;
pub mod store;

pub use config::{RunConfig, Threshold, WorldSize};
pub use error::CliError;
pub use pipeline::{Pipeline, StageReport};
pub use stage::Stage;
pub use store::Store;
