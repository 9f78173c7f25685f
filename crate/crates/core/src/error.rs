use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates an operation's precondition.
    #[error("{0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("critical exponent undefined in this dimension (N = {0})")]
    CriticalExponentUndefined(u32),

    #[error("xi evaluation failed: hypotheses likely violated (r = {r})")]
    XiFailed { r: f64 },

    #[error("no bracket: target index may not be attainable for these parameters (n = {n})")]
    NoBracket { n: usize },

    #[error("target index lost inside bracket: {0}")]
    TargetLost(String),

    /// The integrator stopped on a step failure before the quantity of
    /// interest could be decided.
    #[error("undetermined: integration step failure at r = {r} (gamma = {gamma})")]
    Undetermined { gamma: f64, r: f64 },

    #[error("bisection did not converge: {0}")]
    NotConverged(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Domain(_)
            | Error::CriticalExponentUndefined(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::Json(_) => 1,
            Error::NoBracket { .. } => 2,
            Error::XiFailed { .. }
            | Error::TargetLost(_)
            | Error::Undetermined { .. }
            | Error::NotConverged(_) => 3,
        }
    }
}
