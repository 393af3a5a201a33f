use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter vector is empty")]
    EmptyParams,
    #[error("{count} parameters exceed the maximum of {max}")]
    TooManyParams { count: usize, max: usize },
    #[error("expected {expected} parameters, got {got}")]
    ParamCountMismatch { expected: usize, got: usize },

    #[error("singular matrix at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },

    #[error("invalid kinematic tree: {0}")]
    InvalidTree(String),
    #[error("invalid parent body index {0}")]
    InvalidParent(usize),
    #[error("invalid body '{name}': {reason}")]
    InvalidBody { name: String, reason: String },
    #[error("degenerate inertia: mass matrix singular at coordinate {dof} (body '{body}')")]
    DegenerateInertia { dof: usize, body: String },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("body '{0}' has zero mass")]
    ZeroMass(String),

    #[error("inverted element: tet {tet} has det F = {det:e}")]
    InvertedElement { tet: usize, det: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("simulation diverged at step {step} (frame {frame}): {detail}")]
    Divergence { step: usize, frame: usize, detail: String },
    #[error("inverted element at step {step} (frame {frame}): tet {tet}, det F = {det:e}")]
    InversionDuringStep { step: usize, frame: usize, tet: usize, det: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid torque schedule: {0}")]
    InvalidSchedule(String),

    #[error("loss: {0}")]
    Loss(String),
    #[error("all {0} restarts diverged")]
    AllRestartsDiverged(usize),

    #[error("{path}: {field}: {reason}")]
    Format { path: PathBuf, field: String, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    /// True for failures of the simulated dynamics, as opposed to bad input.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::InversionDuringStep { .. }
                | Error::InvertedElement { .. }
                | Error::NonFinite(_)
                | Error::Singular { .. }
                | Error::DegenerateInertia { .. }
        )
    }
}
