//! Dynamics of two-site quantum correlations in a periodically driven
//! anisotropic XY chain.
//!
//! The chain is mapped to free fermions, so every quantity is built from
//! independent 4×4 momentum blocks.  Modules, bottom up:
//!
//! * [`model`] – parameters, block Hamiltonians and momentum grids
//! * [`floquet`] – one-period propagators, quasi-energies, group velocity
//! * [`evolution`] – thermal states, stroboscopic evolution, correlators
//! * [`measures`] – concurrence, discord, trace distance, power-law fits
//! * [`ergodicity`] – comparison of steady states with Gibbs curves
//! * [`oracle`] – exact diagonalisation of short chains
//! * [`revival`] – revival detection in finite-chain time series
//! * [`validation`] – the invariant and oracle checks behind `spinchain validate`

pub mod ergodicity;
pub mod evolution;
pub mod floquet;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod revival;
pub mod validation;

pub use num_complex::Complex64 as C64;

pub use evolution::{CorrelatorSet, QuadratureSettings, TwoSiteState};
pub use model::{KMode, ModelParams};
