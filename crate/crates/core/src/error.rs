use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("field modulus mismatch: {left:#x} vs {right:#x}")]
    ModulusMismatch { left: u32, right: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("work budget exceeded: {needed} units required, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("no base code with bias <= {target} in {tries} tries; best bias found {best}")]
    SearchExhausted { target: f64, tries: usize, best: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

/// Refuses work whose size exceeds `budget`.
pub(crate) fn check_budget(needed: u128, budget: u128) -> Result<()> {
    if needed > budget {
        Err(Error::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}
