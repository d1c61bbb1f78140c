//! Coordinated multi-cell near-field ISCAP beamforming toolkit.
//!
//! One transmit signal per base station serves three functions at once:
//! downlink communication to a user, wireless power transfer to an energy
//! receiver whose position is only known up to an uncertainty region, and
//! illumination of a sensing area for distributed radar detection. The
//! crate builds the spherical-wavefront near-field channels, evaluates the
//! performance functionals (SINR, region-averaged harvested power, echo
//! power, detection probability), and solves the beamforming design both
//! optimally (semidefinite relaxation with tight rank-one recovery) and
//! suboptimally (maximum ratio transmission with LP power allocation and a
//! closed-form large-array limit).
//!
//! Modules map onto the pipeline:
//! - [`numerics`]: Hermitian linear algebra, Gaussian tail functions, unit
//!   conversions.
//! - [`geometry`]: ULA geometry and near-field channel vectors.
//! - [`scenario`]: configuration ingestion and the built-in network cases.
//! - [`covariance`]: location-averaged ER channel covariances by quadrature.
//! - [`metrics`]: all ISCAP performance functionals of a candidate solution.
//! - [`sdp`]: embedded primal-dual interior-point solver for the conic
//!   programs, plus a plain-text interchange export.
//! - [`sdr`]: the relaxed beamforming designs, rank-one extraction, and the
//!   non-coordinated / worst-case-robust baselines.
//! - [`mrt`]: fixed-direction design, LP power allocation, closed-form
//!   asymptotics.
//! - [`experiments`]: sweep driver, power maps, CSV/heatmap emission.

pub mod covariance;
pub mod experiments;
pub mod geometry;
pub mod metrics;
pub mod mrt;
pub mod numerics;
pub mod scenario;
pub mod sdp;
pub mod sdr;

pub use metrics::{BeamformingSolution, CuType, Provenance};
pub use numerics::{CMatrix, CVector, HermitianMatrix};
pub use scenario::Scenario;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("quadrature did not reach tolerance {requested:.3e}; achieved {achieved:.3e}")]
    Tolerance { requested: f64, achieved: f64 },
    #[error("problem infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("degenerate solution: {0}")]
    DegenerateSolution(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
