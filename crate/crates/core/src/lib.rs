//! Numerical laboratory for the segregation system
//! `M-(u_i) = (1/eps) u_i sum_{j != i} u_j` on a 2-D disk.
//!
//! Parameter checks use `!(x > 0.0)` style comparisons on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod pucci;
pub mod solver;
pub mod analysis;
pub mod barriers;
pub mod io;
pub mod verify;
pub mod config;
pub mod cli;

pub use error::{Error, Result};
