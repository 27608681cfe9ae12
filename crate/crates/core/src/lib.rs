//! Numerical laboratory for the Vlasov-Navier-Stokes system on the periodic torus.

pub mod asymptotics;
pub mod cli_io;
pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod particles;
pub mod selftest;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
