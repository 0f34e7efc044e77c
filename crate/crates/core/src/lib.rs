// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// frozen oracle values keep every digit the oracle printed
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod approx;
pub mod cached;
pub mod config;
pub mod conventional;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod model;
pub mod quadrature;
pub mod report;
pub mod sim;
pub mod specfun;
pub mod tradeoff;

pub use error::{Error, Result};
