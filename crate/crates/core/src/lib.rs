// `!(a > b)` comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::redundant_guards)]

pub mod error;
pub mod fem;
pub mod frequency;
pub mod geometry;
pub mod harness;
pub mod poly;
pub mod profile;
pub mod quadrature;
pub mod spectrum;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
