use thiserror::Error;

/// Errors raised by the numeric and arithmetic routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested accuracy cannot be certified.
    #[error("precision error: {0}")]
    Precision(String),
    /// Inconsistent arguments (mismatched limits, bad flags).
    #[error("usage error: {0}")]
    Usage(String),
    /// An Euler factor whose constant term is not 1.
    #[error("invalid Euler factor at p = {prime}: constant term {constant}")]
    InvalidFactor { prime: u64, constant: f64 },
    /// Bad reduction at 2 or 3 that the tangent test cannot resolve.
    #[error("reduction type at p = {0} is ambiguous; supply an a_p override")]
    RequiresOverride(u64),
    /// A prime beyond the configured point-counting bound.
    #[error("prime {prime} exceeds the point-counting bound {bound}")]
    Bound { prime: u64, bound: u64 },
    /// Invalid curve or run configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Division by a vanishing quantity.
    #[error("division error: {0}")]
    Division(String),
    /// A coefficient that must be nonnegative is not.
    #[error("negative coefficient c({index}) = {value:e} (local factor at p = {prime})")]
    Negative { index: usize, value: f64, prime: u64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
