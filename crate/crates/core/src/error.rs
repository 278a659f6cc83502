use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain description: {0}")]
    DomainSpec(String),

    #[error("expression error at column {pos}: {msg}")]
    Expr { pos: usize, msg: String },

    #[error("budget too small: {0}")]
    BudgetTooSmall(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An exponent pair violates the hypotheses of the named check.
    #[error("hypothesis violated ({check}): {detail}")]
    Hypothesis {
        check: &'static str,
        detail: String,
    },

    #[error("domain not resolved at this h: {0}")]
    Unresolved(String),

    #[error("endpoint unresolved: nearest grid node is {distance:.3e} away (limit {limit:.3e})")]
    EndpointUnresolved { distance: f64, limit: f64 },

    #[error("scale unresolved: {0}")]
    ScaleUnresolved(String),

    #[error("unreachable: {0}")]
    Unreachable(String),

    #[error("probes not disjoint: {0}")]
    ProbesNotDisjoint(String),

    #[error("region is not built from the generator family: {0}")]
    NotGenerated(String),

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotConverged(_))
    }
}
