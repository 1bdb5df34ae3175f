//! Boundary-term series of two-dimensional zeta integrals attached to
//! elliptic curves over Q.
//!
//! The special functions, quadrature and coefficient arithmetic are generic
//! over [`Real`]; the curve, series and sampling layers work in `f64`.

// `!(a > b)` is used on purpose so that NaN arguments are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// reference constants carry more digits than f64 holds
#![allow(clippy::excessive_precision)]

pub mod consts;
pub mod curves;
pub mod dirichlet;
pub mod error;
pub mod num;
pub mod quad;
pub mod sieve;
pub mod specfun;
pub mod stochastic;
pub mod verify;
pub mod zseries;

pub use error::{Error, Result};
pub use num::Real;

/// Accuracy budget in double precision.
pub type Budget = specfun::AccuracyBudget<f64>;

/// Double-precision Dirichlet coefficient series.
pub type CoeffSeries = dirichlet::Series<f64>;
