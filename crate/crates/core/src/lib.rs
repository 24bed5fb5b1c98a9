//! Noisy Grover search simulator.
//!
//! Three engines evolve the same circuit: dense statevectors and density
//! matrices for small registers, matrix-product-state quantum trajectories,
//! and matrix-product density operators. The closed-form two-level model in
//! [`analytic`] serves as the exact reference for noiseless runs.

pub mod analytic;
pub mod bits;
pub mod channels;
pub mod cli;
pub mod dense;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mpdo;
pub mod stats;
pub mod symmetric;
pub mod tensornet;
pub mod trace;
pub mod trajectories;

pub use bits::Bitstring;
pub use error::{GroverError, Result};
pub use trace::{RunRecord, RunTrace};
