//! Classical shadows, Wasserstein stability and overlap-gap analysis for sparse quantum spin glasses.

pub mod cli;
pub mod combin;
pub mod dynamics;
pub mod error;
pub mod models;
pub mod ogp;
pub mod ops;
pub mod pauli;
pub mod rng;
pub mod shadows;
pub mod wasserstein;

pub use error::{Error, Result};

#[cfg(test)]
mod properties;
