//! Ground-state energy statistics of Hill's operator -d²/dx² + q on the unit
//! circle, for stationary Gaussian potentials q. Provides spectral sampling of
//! the potential, two independent eigensolvers, the Riccati change of
//! variables behind the exact density formula, Monte Carlo estimators for the
//! density and distribution of the ground state, and the variational
//! Euler-Lagrange solver for the large-|λ| rate function.

pub mod cli;
pub mod config;
pub mod error;
pub mod fourier;
pub mod hill;
pub mod kernel;
pub mod montecarlo;
pub mod riccati;
pub mod sampler;
pub mod variational;

pub use error::{Error, Result};
