//! RIS-assisted high resolution radar sensing.
//!
//! Signal model and synthesis, detection-probability and Fisher-information
//! bounds, and the OMP / association / weighted least-squares sensing
//! pipeline with its evaluation metrics.

pub mod config;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod signal;

pub use error::{Error, Result};
