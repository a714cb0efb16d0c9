//! Simulation and control of the periodic Benjamin–Ono equation forced
//! through the two lowest Fourier modes.

// Guards written as `!(x > 0.0)` reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod random_forcing;
pub mod saturation;
pub mod solver;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
