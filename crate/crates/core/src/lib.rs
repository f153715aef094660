//! Numerical verification of Kähler curvature identities on compact model
//! manifolds.

// index loops mirror the tensor notation; `!(x > 0.0)` also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod expr;
pub mod exterior;
pub mod forms;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod verifier;

pub use error::{Error, Result};
