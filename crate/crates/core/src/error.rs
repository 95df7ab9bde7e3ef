use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DofError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("scene point ({x}, {z}) is not in front of the aperture plane z = {plane}")]
    BehindAperture { x: f64, z: f64, plane: f64 },

    #[error("grazing viewing angle {angle} rad (|angle| must be < pi/2)")]
    GrazingAngle { angle: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("truncation rank {rank} exceeds spectrum length {len}")]
    RankOutOfRange { rank: usize, len: usize },

    #[error("singular value at rank {rank} is zero")]
    ZeroSingularValue { rank: usize },

    #[error("spectrum is empty or identically zero")]
    EmptySpectrum,

    #[error("singular vectors were not computed for this spectrum")]
    MissingVectors,

    #[error("profile mainlobe is clipped by the scene boundary (unresolvable at edge)")]
    UnresolvableAtEdge,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, DofError>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(DofError::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(DofError::InvalidParameter {
            name,
            reason: format!("must be finite, got {value}"),
        })
    }
}
