//! Numerical laboratory for weak-value amplification (WVA).
//!
//! The crate models pre/post-selected quantum systems coupled to meters, the
//! Fisher-information budget of post-selection, technical-noise and detector models,
//! a catalog of amplification schemes, and Monte Carlo estimation.

pub mod coupling;
pub mod dist;
pub mod error;
pub mod estimate;
pub mod infometrics;
pub mod meter;
pub mod noise;
pub mod numeric;
pub mod qsys;
pub mod schemes;
pub mod table;

pub use error::{Error, Result};
pub use num_complex::Complex64;
