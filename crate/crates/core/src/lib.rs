//! Gibbs sampling toolkit: coordinate-conditional kernels over gridded
//! targets, sequential maximal couplings with meeting-probability estimators,
//! closed-form conductance and mixing-time bound calculators, and exact
//! finite-state verification oracles for the inequalities those bounds rest
//! on.
//!
//! Layout:
//! - [`target`]: potentials, builtin example targets, regularity metadata;
//! - [`conditional`]: 1d grids, conditional slices, inverse-CDF sampling,
//!   total variation, maximal coupling;
//! - [`kernels`]: systematic/random-scan Gibbs kernels, coupled steps, chain
//!   runners;
//! - [`bounds`]: isoperimetric profiles, close-coupling certificates, the
//!   conductance/spectral-gap/mixing-time calculators;
//! - [`lab`]: discretized targets, exact transition matrices, brute-force
//!   conductance, spectral gaps, TV decay, three-set sweeps, the coupon
//!   formula, and regularity checks.

pub mod bounds;
pub mod conditional;
pub mod error;
pub mod expr;
pub mod kernels;
pub mod lab;
mod quad;
pub mod rng;
pub mod target;

pub use error::{Error, Result};
