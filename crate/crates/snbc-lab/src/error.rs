use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("budget exceeded: used {used} of {limit} steps")]
    BudgetExceeded { used: u64, limit: u64 },
    #[error("enumeration cap exceeded: {0} atoms")]
    CapExceeded(u128),
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("eigen-solver failed to converge: spectral radius in [{lo}, {hi}]")]
    NonConvergence { lo: f64, hi: f64 },
    #[error("ill-conditioned system: condition estimate {0:.3e}")]
    IllConditioned(f64),
    #[error("function is not a finite sum of separable products: {0}")]
    NotSeparable(String),
    #[error("json: {0}")]
    Json(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
