use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("symmetric eigensolver did not converge within {budget} iterations")]
    EigenNoConvergence { budget: usize },

    #[error("Gramian is singular (numerical rank {rank} of {n}); use the affine solver")]
    SingularP { rank: usize, n: usize },

    #[error("right-hand side inconsistent with the Gramian kernel: |Q'| = {violation:.3e} > {bound:.3e}")]
    InconsistentRhs { violation: f64, bound: f64 },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("binary program has {vars} variables; the budget is {budget}")]
    VariableBudgetExceeded { vars: usize, budget: usize },

    #[error("matrix logarithm undefined: eigenvalue {value:.3e} is not positive")]
    NonPositiveEigenvalue { value: f64 },

    #[error("simplex exceeded {0} pivots")]
    SimplexIterationLimit(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_check(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{what}: expected {expected}, found {found}")))
    }
}
