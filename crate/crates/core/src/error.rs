use thiserror::Error;

/// Unified error type for scenario construction and the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("state enumeration needs {required} states, which exceeds the cap of {cap}")]
    EnumerationCap { required: u128, cap: u64 },

    #[error("Lambert W domain error: x = {0:e} lies below -1/e")]
    LambertDomain(f64),

    #[error("bisection bracket failure: {0}")]
    BracketFailure(String),

    #[error("knapsack DP table needs {cells} cells, which exceeds the cap of {cap}; consider the greedy solver")]
    KnapsackTable { cells: u128, cap: u64 },

    #[error("brute-force oracle supports at most {max} tasks, got {got}")]
    TooManyTasks { got: usize, max: usize },

    #[error("missing allocation for state {0}")]
    MissingAllocation(usize),

    #[error("method {method} requires {what}")]
    MissingInput { method: String, what: String },

    #[error("verification failure: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
