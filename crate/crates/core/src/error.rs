use alloc::string::String;

use crate::expr::ParseError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coefficient {name}: {reason}")]
    Coefficient { name: &'static str, reason: String },
    #[error("halo too short: need {needed} cells beyond the domain, have {available}")]
    HaloTooShort { needed: usize, available: usize },
    #[error("singular system at pivot {0}")]
    SingularSystem(usize),
    #[error("system is not an M-matrix (row {row}: {reason})")]
    NotMMatrix { row: usize, reason: &'static str },
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("d(I) is not affine: fit residual {residual:e} exceeds {tol:e}")]
    NotAffine { residual: f64, tol: f64 },
    #[error("subellipticity certificate failed at I={i}, I'={i_prime} (margin {margin:e})")]
    CertificateFailed { i: f64, i_prime: f64, margin: f64 },
    #[error("comparison violated at grid index {index}: u1 - u2 = {excess:e}")]
    OrderingViolated { index: usize, excess: f64 },
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
}

impl Error {
    /// True for failures of the numerics themselves, as opposed to bad input.
    pub fn is_computational(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem(_)
                | Error::NotMMatrix { .. }
                | Error::NotConverged(_)
                | Error::NotAffine { .. }
                | Error::CertificateFailed { .. }
                | Error::OrderingViolated { .. }
                | Error::InvariantViolated(_)
        )
    }
}
