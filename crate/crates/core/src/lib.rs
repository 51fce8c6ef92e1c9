//! Adaptive finite elements with a truncated Dirichlet-to-Neumann boundary
//! condition for time-harmonic elastic scattering by a rigid obstacle in 2D.

pub mod assembly;
pub mod driver;
pub mod dtn;
pub mod error;
pub mod estimator;
pub mod mesh;
pub mod problem;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
