//! Spectral machinery for one-dimensional periodic Schrödinger operators:
//! Floquet-Bloch band structure, Fermi projection kernels, finite-section
//! trace functionals, and config-driven asymptotic experiments.

pub mod bands;
pub mod error;
pub mod experiments;
pub mod fibre;
pub mod finsec;
pub mod kernel;
pub mod linalg;
pub mod quad;

pub use error::{Error, Result};
