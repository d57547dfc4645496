//! Spectra, scattering data and transmission resonances for 1-D
//! Schrödinger operators `-psi'' + q psi = E psi` with n-cell
//! (finite-periodic) and heterogeneous multi-cell potentials.

pub mod error;
pub mod numeric;
pub mod potential;
pub mod propagate;
pub mod bands;
pub mod scatter;
pub mod boundary;
pub mod oracle;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
pub use numeric::Tolerances;
