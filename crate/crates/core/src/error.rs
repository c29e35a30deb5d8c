use thiserror::Error;

/// Errors raised by estimation and inference routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("design matrix is rank deficient (rank {rank} < {columns} columns)")]
    RankDeficient { rank: usize, columns: usize },

    #[error("degenerate spacing: {0}")]
    DegenerateSpacing(String),

    #[error("estimator not applicable: {0}")]
    Applicability(String),

    #[error("unbounded linear program: {0}")]
    Unbounded(String),

    #[error("solver stopped after {iterations} iterations without converging: {detail}")]
    NonConvergence { iterations: usize, detail: String },

    #[error("too few valid draws: {valid} valid, {skipped} skipped")]
    InsufficientDraws { valid: usize, skipped: usize },

    #[error("at tau = {tau}: {source}")]
    AtTau {
        tau: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn at_tau(self, tau: f64) -> Self {
        Error::AtTau {
            tau,
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through [`Error::AtTau`] annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTau { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad
    /// arguments or unsuitable data).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::DegenerateSpacing(_)
                | Error::Unbounded(_)
                | Error::NonConvergence { .. }
                | Error::InsufficientDraws { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
