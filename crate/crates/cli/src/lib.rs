//! Configuration-driven runner for the steinlab experiments.

pub mod acceptance;
pub mod config;
pub mod model;
pub mod run;

pub use config::{ExperimentConfig, Mode, ModelSpec};
pub use model::Model;
