//! Numerical study of transition fronts for the nonlocal equation
//! `u_t = J * u - u + f(t, u)` with a time-heterogeneous ignition nonlinearity.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod error;
pub mod evolution;
pub mod fronts;
pub mod grid;
pub mod kernel;
pub mod nonlinearity;
pub mod path;
pub mod stats;
pub mod verify;
pub mod waves;

pub use error::{Error, Result};
