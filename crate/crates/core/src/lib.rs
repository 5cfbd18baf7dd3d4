//! Linear stability of boundary-layer shear flows: Rayleigh and
//! Orr-Sommerfeld operators and their adjoints on the half line.

pub mod error;
pub mod jet;
pub mod odecore;
pub mod orrsommerfeld;
pub mod profiles;
pub mod rayleigh;
pub mod viscgreen;

pub use error::{Result, StabilityError};
pub use num_complex::Complex64 as C64;
