//! Wearable-IMU stroke analytics.
//!
//! Turns four-sensor arm IMU recordings and per-stroke video measurements
//! into a clustered performance space, picks the benchmark cluster closest
//! to ideal performance and summarises each cluster's joint-angle motion.

pub mod attitude;
pub mod cluster;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod kinematics;
pub mod performance;
pub mod pipeline;
pub mod synthetic;

pub use error::{Error, Result, Stage};
