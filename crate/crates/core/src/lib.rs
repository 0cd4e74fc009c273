//! Quasi-periodic lattice Schrödinger operators with grand-ensemble
//! potentials: hull construction, finite-volume multi-scale analysis and
//! Monte Carlo eigenvalue statistics.

pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod msa;
pub mod operator;
pub mod randelette;
pub mod stats;

pub use error::{Error, Result};
