//! Geometry-constrained degrees-of-freedom analysis for 1D active imaging
//! arrays under the Born approximation.
//!
//! The crate covers the k-space view of monostatic and multistatic arrays,
//! the space-bandwidth product (SBP) as a predictor of the number of useful
//! singular values, the discretized forward operator and its SVD, the
//! Fresnel-regime limits with the effective-aperture construction, and image
//! reconstruction by truncated pseudoinverse and matched filtering.
//!
//! All lengths are in meters and all angles in radians.

pub mod error;
pub mod fresnel;
pub mod geometry;
pub mod kspace;
pub mod operator;
pub mod recon;
pub mod sbp;

pub use error::{DofError, Result};
pub use geometry::{Aperture, GeometryClass, Point2, SceneSegment, WaveContext};
pub use operator::{Architecture, ArrayLayout, DiscreteOperator, SvdSpectrum};
