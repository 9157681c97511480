//! Bayesian learning of probability densities represented as density
//! operators, with wavelet projections learned through a squared-kernel
//! trick.

pub mod basis;
pub mod cli;
pub mod discrete;
pub mod embedding;
pub mod error;
pub mod learn;
pub mod samples;
pub mod target;

pub use error::{Error, Result};
