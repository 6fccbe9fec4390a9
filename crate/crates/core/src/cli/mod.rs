//! Experiment runner: configs, presets, manifests and the pipeline.

pub mod config;
pub mod manifest;
pub mod presets;
pub mod runner;

pub use config::RunConfig;
pub use manifest::RunManifest;
pub use presets::list_presets;
pub use runner::{run, sweep, RunOutcome, RunSummary, SweepOutcome};
