//! Mapping non-Hermitian coupled-mode dynamics onto Hermitian bosonic
//! quadratic Hamiltonians, and the tools to study the result: spectra,
//! exceptional points, parametric dynamics, sensing and topology.

pub mod dynamics;
pub mod encircling;
pub mod error;
pub mod linalg;
pub mod mapping;
pub mod models;
pub mod sensing;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};
