//! Deterministic numeric kernels: dense matrices, symmetric
//! eigendecomposition, k-means, Adam, and seeded RNG.

mod adam;
mod eig;
mod kmeans;
mod matrix;
mod rng;

pub use adam::{adam_step, AdamState};
pub use eig::sym_eig;
pub use kmeans::{kmeans, DEFAULT_RESTARTS};
pub use matrix::Matrix;
pub use rng::Rng;
