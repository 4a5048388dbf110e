//! Harmonic analysis on SL(2,R) at desk scale.

pub mod config;
pub mod error;
pub mod gamma;
pub mod packets;
pub mod quadrature;
pub mod radial;
pub mod spherical;
pub mod structure;
pub mod transforms;
pub mod tube;
pub mod verify;

pub use error::{LabError, Result};
