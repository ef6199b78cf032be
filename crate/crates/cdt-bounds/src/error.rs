//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced while validating data, solving subproblems, or running
/// bound drivers.
///
/// The CLI maps these to exit codes: data problems (I/O, parsing, validation,
/// violated standing assumptions, bad arguments) are exit 2, numerical
/// failures are exit 3.
#[derive(Debug, Error)]
pub enum CdtError {
    /// Reading or writing a file failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A file was readable but not a valid instance document.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    /// Instance data violates a structural invariant (symmetry, positive
    /// definiteness, dimensions, finiteness).
    #[error("invalid instance: {0}")]
    Validation(String),

    /// The ellipsoid has no interior point inside the unit ball, so the
    /// bound theory does not apply to this instance.
    #[error("interior assumption violated: min ellipsoid value {ell_a} >= a0 {a0}")]
    InteriorAssumption { ell_a: f64, a0: f64 },

    /// A caller-supplied argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An eigendecomposition failed to converge or returned non-finite data.
    #[error("eigendecomposition failure: {0}")]
    Eigen(String),

    /// A safeguarded scalar root search failed to bracket or converge.
    #[error("root finding failure: {0}")]
    RootFinding(String),

    /// A secular-equation evaluation was requested exactly at a pole.
    #[error("secular equation evaluated at a pole: {0}")]
    SecularPole(String),

    /// Random instance generation exhausted its resampling budget.
    #[error("instance generation failed: {0}")]
    Generation(String),

    /// A numerical routine produced data that violates its own contract.
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CdtError {
    /// True for errors that indicate bad input data rather than a numerical
    /// breakdown; the CLI uses this to pick exit codes.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            CdtError::Io { .. }
                | CdtError::Parse { .. }
                | CdtError::Validation(_)
                | CdtError::InteriorAssumption { .. }
                | CdtError::InvalidParameter(_)
        )
    }
}
