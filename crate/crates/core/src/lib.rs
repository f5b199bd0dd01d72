//! Driven biexciton-exciton cascade of a quantum dot under two-photon resonant
//! excitation: Lindblad dynamics, dressed-state spectral lines and filtered
//! photon correlations.

pub mod constants;
pub mod correlate;
pub mod dressed;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod numerics;
pub mod qsystem;

pub use error::{Error, Result};
