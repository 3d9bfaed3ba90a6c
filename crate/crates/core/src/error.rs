use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("discretization error: {0}")]
    Discretization(String),
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("support too large for exact transport: {0} points (limit {1})")]
    SupportTooLarge(usize, usize),
    #[error("infeasible Monte Carlo budget: {0}")]
    Infeasible(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
