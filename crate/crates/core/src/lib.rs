pub mod assignment;
pub mod continuum;
pub mod duality;
pub mod dynamics;
pub mod error;
pub mod fixtures;
pub mod hilbert;
pub mod io;
pub mod quadrature;
pub mod torus;

pub use error::{Error, Result};
