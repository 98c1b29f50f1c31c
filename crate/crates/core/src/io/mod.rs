//! Event logs, preprocessing, run configuration and checkpoints.

pub mod checkpoint;
pub mod config;
pub mod ingest;
pub mod preprocess;

pub use checkpoint::Checkpoint;
pub use config::{Overrides, RunConfig};
pub use ingest::{ingest, read_events, save_events, write_events};
pub use preprocess::{preprocess, preset, Preset, PRESETS};
