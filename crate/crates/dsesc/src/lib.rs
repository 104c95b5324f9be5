//! Double self-expressive subspace clustering.
//!
//! Learns a self-expressive coefficient matrix C over (optionally
//! autoencoded) data, a second coefficient matrix theta over C itself, fuses
//! the two into an affinity matrix, spectral-clusters it, and evaluates the
//! result with ACC / NMI / SRE / CONN. Ships with a synthetic
//! union-of-subspaces generator and a config-driven experiment runner
//! (ablations, gamma sweeps) exposed through the `dsesc` CLI.

pub mod datasets;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod spectral;

pub use error::{Error, Result};
