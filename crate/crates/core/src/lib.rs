//! Expected nodal-set densities of Gaussian random eigenfunctions of the
//! semiclassical isotropic harmonic oscillator, computed three independent
//! ways and cross-validated:
//!
//! * exact Kac-Rice densities from the spectral-projector kernel
//!   ([`projector`], [`kacrice`]),
//! * closed-form semiclassical asymptotics in the allowed and forbidden
//!   regions ([`asymptotics`]),
//! * Monte-Carlo measurement of actual nodal sets ([`nodal`]).

pub mod asymptotics;
pub mod ensemble;
pub mod error;
pub mod hermite;
pub mod kacrice;
pub mod nodal;
pub mod numeric;
pub mod params;
pub mod projector;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use params::ModelParams;
