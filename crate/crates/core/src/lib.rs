//! Numerical laboratory for radial critical points of the Moser-Trudinger
//! functional on the unit disk.

pub mod analysis;
pub mod error;
pub mod linearized;
pub mod maximizer;
pub mod ode;
pub mod perturbations;
pub mod profiles;
pub mod quadrature;
pub mod shooting;

pub use error::{Error, Result};
