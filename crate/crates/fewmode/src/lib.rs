//! Few-mode system-bath decomposition of one-dimensional scattering problems.

pub mod config;
pub mod convergence;
pub mod error;
pub mod geometry;
pub mod interaction;
pub mod modes;
pub mod numerics;
pub mod projection;
pub mod run;
pub mod scattering;
pub mod verify;

pub use error::{Error, Result};
