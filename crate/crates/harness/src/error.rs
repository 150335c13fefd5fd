//! Harness errors and their process exit codes.

use lacerate::cut::CutError;
use lacerate::geometry::GeometryError;
use lacerate::mesh::MeshError;
use lacerate::particles::ParticleError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Unreadable or malformed input. Exit code 1.
    #[error("input error: {0}")]
    Input(String),
    /// Input that parses but violates a geometric precondition. Exit code 2.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// A result broke an invariant the library guarantees. Exit code 3.
    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Input(_) => 1,
            HarnessError::Geometry(_) => 2,
            HarnessError::Internal(_) => 3,
        }
    }

    pub fn input(e: impl std::fmt::Display) -> Self {
        HarnessError::Input(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Input(e.to_string())
    }
}

impl From<MeshError> for HarnessError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::NonManifold(..) => HarnessError::Geometry(e.to_string()),
            MeshError::StaleSections { .. } => HarnessError::Internal(e.to_string()),
            _ => HarnessError::Input(e.to_string()),
        }
    }
}

impl From<GeometryError> for HarnessError {
    fn from(e: GeometryError) -> Self {
        HarnessError::Geometry(e.to_string())
    }
}

impl From<ParticleError> for HarnessError {
    fn from(e: ParticleError) -> Self {
        match e {
            ParticleError::Format(_) => HarnessError::Input(e.to_string()),
            _ => HarnessError::Geometry(e.to_string()),
        }
    }
}

impl From<CutError> for HarnessError {
    fn from(e: CutError) -> Self {
        match e {
            CutError::StraddlingFace(_) | CutError::Mesh(_) => HarnessError::Internal(e.to_string()),
            _ => HarnessError::Geometry(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
