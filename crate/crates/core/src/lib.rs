//! Nonequilibrium steady states of a driven Ising chain in a lossy cavity.

pub mod error;
pub mod exact_diag;
pub mod fluctuations;
pub mod ising;
pub mod params;
pub mod phase;
mod quadrature;
pub mod selfconsistency;
pub mod validate;

pub use error::{Error, Result};
pub use params::SystemParams;
