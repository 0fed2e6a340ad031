use thiserror::Error;

use crate::experiments::SweepRow;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension n = {0} (supported: 1, 2, 3)")]
    UnsupportedDimension(usize),

    #[error("quadrature scheme {scheme} cannot integrate over {domain}")]
    UnsupportedScheme { scheme: &'static str, domain: String },

    #[error("annulus is built on a different ball")]
    BaseMismatch,

    /// Refinement ran out of budget. Iterates are natural logs of |integral|.
    #[error(
        "quadrature did not converge after {refinements} refinements (order {order}): \
         last two log-iterates {previous:.12e}, {last:.12e}"
    )]
    NotConverged {
        refinements: usize,
        order: usize,
        previous: f64,
        last: f64,
    },

    #[error("sweep aborted at |c_B| = {at} after {} completed rows: {source}", partial.len())]
    SweepAborted {
        at: f64,
        partial: Vec<SweepRow>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical engine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotConverged { .. } => true,
            Error::SweepAborted { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
