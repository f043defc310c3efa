//! UKF-SLAM for dynamic environments.
//!
//! A landmark-based unscented Kalman filter SLAM whose measurement stream is
//! gated by a range-consistency test that rejects moving landmarks, together
//! with a seeded world generator, a range-bearing sensor simulator, a
//! trajectory-error metric and a paired benchmark harness.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod dynamic_filter;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod rng;
pub mod scenario;
pub mod sensing;
pub mod slam;
pub mod unscented;

pub use error::{Error, Result};
