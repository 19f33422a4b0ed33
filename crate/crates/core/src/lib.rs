//! Simulation and exact-computation toolkit for sparse inhomogeneous symmetric
//! random matrices `X = Σ ∘ W`.
//!
//! * [`profiles`] builds doubly-stochastic variance profiles (full Wigner, unions
//!   of cliques, circular bands, random regular graphs).
//! * [`entries`] holds the entry laws ξ with exact moment tables and truncation.
//! * [`sampler`] draws realizations with a counter-based, thread-count independent
//!   seeding contract.
//! * [`eigen`] is a self-contained symmetric eigensolver (Householder + implicit QL,
//!   and Lanczos for extreme eigenvalues).
//! * [`semicircle`] gives density, CDF, Catalan moments and the Kolmogorov distance.
//! * [`walks`] computes expected spectral moments exactly by closed-walk enumeration.
//! * [`experiments`] runs the reproducible Monte-Carlo sweeps.

pub mod eigen;
pub mod entries;
pub mod experiments;
pub mod format;
pub mod profiles;
pub mod quadrature;
pub mod sampler;
pub mod semicircle;
pub mod walks;

pub use eigen::{DenseMatrix, Spectrum};
pub use entries::EntryDistribution;
pub use profiles::VarianceProfile;
pub use sampler::MatrixSample;
