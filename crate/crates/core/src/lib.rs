//! β-divergence nonnegative matrix factorization with disjoint equality constraints.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod cli;
pub mod constraints;
pub mod divergence;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod rootfind;
pub mod synth;
pub mod updates;

pub use error::{Error, Result};

/// Dense real matrix used for data and factors.
pub type Matrix = ndarray::Array2<f64>;
