use thiserror::Error;

/// Errors raised by distribution construction, sampling and the testers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distribution needs at least one element")]
    EmptyDomain,
    #[error("weight at index {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to zero")]
    ZeroMass,
    #[error("weight at index {index} is not finite")]
    NonFiniteWeight { index: usize },
    #[error("domain sizes differ: {left} vs {right}")]
    DomainMismatch { left: usize, right: usize },
    #[error("partition does not cover the domain")]
    IncompletePartition,
    #[error("partition cells overlap or reference elements outside [0, {n})")]
    InvalidPartition { n: usize },
    #[error("cell is empty")]
    EmptyCell,
    #[error("proximity parameter {0} outside its admissible range")]
    InvalidEpsilon(f64),
    #[error("mixture parameter {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("element {index} out of range for domain of size {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: u64, got: u64 },
    #[error("count vector holds no samples")]
    EmptyCounts,
    #[error("invalid number of flat pieces k = {k} for domain of size {n}")]
    InvalidK { k: usize, n: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_same_domain(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DomainMismatch { left, right });
    }
    Ok(())
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    Ok(())
}
