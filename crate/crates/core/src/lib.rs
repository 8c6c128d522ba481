//! Numerical laboratory for the damped p-system
//! `v_t - u_x = 0, u_t + P(v)_x = -u` in Lagrangian coordinates.
//!
//! The crate builds the diffusion wave of the porous medium equation and its
//! first-order correction, simulates the full system, and measures how fast
//! solutions approach both asymptotic profiles.

pub mod analysis;
pub mod correction;
pub mod duhamel;
pub mod error;
pub mod green;
mod jet;
pub mod pressure;
pub mod profile;
pub mod quadrature;
mod scaled;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
pub use pressure::{FarField, PressureLaw};
