//! Driven-dissipative Rydberg lattice toolkit: mean-field master-equation
//! simulation, closed-form broadening laws and the fitting pipeline that
//! extracts linewidths, rates and scaling collapses from measured curves.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fitting;
pub mod io;
pub mod kinetics;
pub mod meanfield;
pub mod units;

pub use error::{Error, Result};
