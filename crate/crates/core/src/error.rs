use std::fmt;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid signaling scheme: {}", ViolationList(.0))]
    InvalidScheme(Vec<Violation>),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A combinatorial enumeration would exceed its configured cap.
    #[error("{what} count {count} exceeds guard {limit}{note}")]
    GuardExceeded {
        what: &'static str,
        count: u128,
        limit: u128,
        note: String,
    },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The welfare-constrained program has no feasible point at this fraction.
    #[error("infeasible at welfare fraction beta = {beta}")]
    InfeasibleAtBeta { beta: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by malformed input data.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::InvalidInstance(_)
                | Error::InvalidScheme(_)
                | Error::InvalidPartition(_)
                | Error::InvalidGraph(_)
                | Error::InvalidArgument(_)
        )
    }
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, v) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
