// NaN must fail every domain check, so comparisons are written negated.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circular;
pub mod cli;
pub mod copula;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod mcmc;
pub mod model;
pub mod normal;
pub mod orthant;
pub mod quadrature;
pub mod tpn;
pub mod wishart;

pub use error::{Error, Result};
