use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("branch budget exceeded: {needed} sign patterns requested, limit is {limit}")]
    BranchBudget { needed: u64, limit: u64 },
    #[error("memory budget exceeded: {needed} amplitudes requested, limit is {limit}")]
    MemoryBudget { needed: u64, limit: u64 },
    #[error("scan budget exceeded: {needed} grid points requested, limit is {limit}")]
    ScanBudget { needed: u64, limit: u64 },
    #[error("truncation leak {leak:.3e} exceeds bound {bound:.3e}")]
    Leak { leak: f64, bound: f64 },
    #[error("{op} is not available for target family {family}")]
    Unsupported { op: &'static str, family: &'static str },
    #[error("energy window unreachable after {0} consecutive rejections")]
    InfeasibleWindow(u64),
    #[error("singular matrix")]
    Singular,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("sample {index}: {source}")]
    AtSample { index: usize, source: Box<Error> },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Capacity,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Invalid(_) | Error::Contract(_) | Error::Unsupported { .. } => ErrorClass::Config,
            Error::BranchBudget { .. }
            | Error::MemoryBudget { .. }
            | Error::ScanBudget { .. }
            | Error::Leak { .. }
            | Error::InfeasibleWindow(_) => ErrorClass::Capacity,
            Error::Singular | Error::Numerical(_) => ErrorClass::Numerical,
            Error::AtSample { source, .. } => source.class(),
        }
    }

    pub fn at_sample(self, index: usize) -> Error {
        Error::AtSample { index, source: Box::new(self) }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
