//! Per-segment orientation estimation.

mod ekf;
mod quaternion;

pub use ekf::{
    ekf_init, ekf_propagate, ekf_update, estimate_orientation, predicted_gravity,
    write_orientation_track, Covariance6, EkfConfig, EkfErrorState, EkfState, OrientationTrack,
    UpdateOutcome,
};
pub use quaternion::{error_quat, quat_multiply, skew, Quaternion};
