use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Numeric values are carried as `f64` so the error type stays non-generic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} outside {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "singular denominator: r_cleanup = {r_cleanup} at k = {k}{}; integrate in time instead (integrate_in_time)",
        .c.map(|c| format!(", c = {c}")).unwrap_or_default()
    )]
    SingularDenominator {
        k: f64,
        r_cleanup: f64,
        c: Option<f64>,
    },

    #[error("degenerate state: c = {c} after step {step}")]
    DegenerateState { c: f64, step: u64 },

    #[error("step budget of {max_steps} steps exceeded before reaching c = {c_end}")]
    StepBudgetExceeded { max_steps: u64, c_end: f64 },

    #[error("c_p = {c_p} left [0, c] with c = {c}")]
    OutOfBounds { c: f64, c_p: f64 },

    #[error("epoch {epoch}: {source}")]
    Epoch {
        epoch: u32,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Domain { .. } | Error::InvalidConfig(_) => false,
            Error::Epoch { source, .. } => source.is_numerical(),
            _ => true,
        }
    }
}
