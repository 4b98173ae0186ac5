//! Experiment harness over the slow-fast resonance toolkit: pseudophase
//! accuracy sweeps against the averaged prediction, uniformity statistics of
//! the crossing pseudophase, surface-point analysis, and artifact emission.
//!
//! The [`sweep`] module drives single trajectories and the accuracy table,
//! [`uniformity`] samples pseudophase distributions, [`fit`] provides the
//! least-squares scaling fit, [`analysis`] summarizes the crossing structure
//! at a surface point, and [`emit`] writes CSV/JSON artifacts with plot-ready
//! companions.

pub mod analysis;
pub mod emit;
pub mod fit;
pub mod sweep;
pub mod uniformity;

use slowfast_core::averaging::AveragingError;
use slowfast_core::model::ModelError;
use slowfast_core::resonance::ResonanceError;
use std::fmt;

/// Errors from experiment configuration, runs, and artifact writing.
#[derive(Debug)]
pub enum ExperimentError {
    /// Invalid configuration; maps to CLI exit code 2.
    Config(String),
    /// A fit was requested on insufficient or degenerate data.
    Underdetermined(String),
    Model(ModelError),
    Averaging(AveragingError),
    Resonance(ResonanceError),
    /// Artifact I/O failure, with the path it concerned.
    Io { path: String, source: std::io::Error },
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            ExperimentError::Underdetermined(msg) => write!(f, "fit underdetermined: {msg}"),
            ExperimentError::Model(e) => e.fmt(f),
            ExperimentError::Averaging(e) => e.fmt(f),
            ExperimentError::Resonance(e) => e.fmt(f),
            ExperimentError::Io { path, source } => write!(f, "{path}: {source}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<ModelError> for ExperimentError {
    fn from(e: ModelError) -> ExperimentError {
        ExperimentError::Model(e)
    }
}

impl From<AveragingError> for ExperimentError {
    fn from(e: AveragingError) -> ExperimentError {
        ExperimentError::Averaging(e)
    }
}

impl From<ResonanceError> for ExperimentError {
    fn from(e: ResonanceError) -> ExperimentError {
        ExperimentError::Resonance(e)
    }
}
