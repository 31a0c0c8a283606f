//! Configuration, seeded Monte Carlo orchestration and CSV emission.
//!
//! All result files are plain CSV with a header row and a fixed column
//! order. Given one configuration and seed, repeated runs produce
//! byte-identical files; the only exception is `timings.csv`, which
//! records wall-clock per step for information and is naturally
//! irreproducible.

pub mod config;
pub mod csvio;
pub mod run;
pub mod score;
pub mod tables;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("configuration parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration at {field}: {reason}")]
    Config { field: String, reason: String },
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error(transparent)]
    Tracker(#[from] crate::tracker::TrackerError),
    #[error(transparent)]
    FrameFile(#[from] crate::framefile::FrameFileError),
    #[error(transparent)]
    Frame(#[from] crate::grid::FrameError),
    #[error("malformed input file {path}: {reason}")]
    Malformed { path: String, reason: String },
}
