// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod correlation;
pub mod model;
pub mod quadrature;
pub mod rates;
pub mod solvers;
pub mod transistor;
