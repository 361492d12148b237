//! Multiplicative error-state EKF for gravity-aided attitude and gyro-bias
//! estimation from a 6-axis IMU.
//!
//! The nominal state is a unit quaternion (body to world) and a gyro bias.
//! The filter tracks a 6-dim error `[δθ; Δb]` where `δθ` is a small rotation
//! in the body frame, so the true attitude is `q̂ ⊗ δq(δθ)`.
//!
//! * propagation: `ω̂ = ω_m − b̂`, `q̂ ← q̂ ⊗ exp(ω̂ dt)`,
//!   `P ← F P Fᵀ + Q` with `F = [[I − [ω̂×]dt, −I dt], [0, I]]`
//! * update: the normalized accelerometer is compared with the predicted
//!   gravity direction `ĝ_s = R(q̂)ᵀ e_z`, `H = [[ĝ_s×], 0]`.
//!
//! Yaw is unobservable from gravity alone and stays relative to the initial
//! heading, which [`ekf_init`] sets to zero.

use std::io::Write;

use nalgebra::{Matrix3, Matrix6, SMatrix, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::quaternion::{error_quat, skew, Quaternion};
use crate::error::{Error, Result};
use crate::ingest::{SensorId, SensorStream, STANDARD_GRAVITY};

pub type Covariance6 = Matrix6<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfState {
    pub q: Quaternion,
    /// rad/s
    pub bias: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfErrorState {
    pub delta_theta: Vector3<f64>,
    pub delta_bias: Vector3<f64>,
}

impl EkfErrorState {
    fn from_vector(v: &Vector6<f64>) -> Self {
        EkfErrorState {
            delta_theta: v.fixed_rows::<3>(0).into(),
            delta_bias: v.fixed_rows::<3>(3).into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EkfConfig {
    /// rad/s/√Hz
    pub gyro_noise_density: f64,
    /// rad/s²/√Hz
    pub bias_random_walk: f64,
    /// m/s²
    pub accel_noise_std: f64,
    /// m/s²
    pub gravity_magnitude: f64,
    /// Updates are skipped when |‖a‖ − g| / g exceeds this.
    pub accel_gate: f64,
    /// rad
    pub initial_attitude_std: f64,
    /// rad/s
    pub initial_bias_std: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        EkfConfig {
            gyro_noise_density: 0.005,
            bias_random_walk: 0.0001,
            accel_noise_std: 0.05 * STANDARD_GRAVITY,
            gravity_magnitude: STANDARD_GRAVITY,
            accel_gate: 0.15,
            initial_attitude_std: 0.3,
            initial_bias_std: 0.01,
        }
    }
}

impl EkfConfig {
    pub fn validate(&self) -> Result<()> {
        let finite_positive = [
            ("gyro_noise_density", self.gyro_noise_density),
            ("bias_random_walk", self.bias_random_walk),
            ("accel_noise_std", self.accel_noise_std),
            ("gravity_magnitude", self.gravity_magnitude),
            ("initial_attitude_std", self.initial_attitude_std),
            ("initial_bias_std", self.initial_bias_std),
        ];
        for (name, v) in finite_positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("ekf.{name} must be positive, got {v}")));
            }
        }
        // +inf disables gating
        if !(self.accel_gate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "ekf.accel_gate must be positive, got {}",
                self.accel_gate
            )));
        }
        Ok(())
    }

    fn measurement_variance(&self) -> f64 {
        let s = self.accel_noise_std / self.gravity_magnitude;
        s * s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationTrack {
    pub sensor: SensorId,
    pub quats: Vec<Quaternion>,
    pub biases: Vec<[f64; 3]>,
}

impl OrientationTrack {
    pub fn len(&self) -> usize {
        self.quats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quats.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub state: EkfState,
    pub cov: Covariance6,
    pub accepted: bool,
    pub correction: Option<EkfErrorState>,
}

fn symmetrize(p: &Covariance6) -> Covariance6 {
    (p + p.transpose()) * 0.5
}

fn check_finite3(name: &str, v: &Vector3<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{name} = {v:?}")))
    }
}

fn check_state(state: &EkfState, p: &Covariance6) -> Result<()> {
    if !state.q.is_finite() {
        return Err(Error::NonFinite(format!("attitude {:?}", state.q)));
    }
    check_finite3("bias", &state.bias)?;
    if !p.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("covariance".into()));
    }
    Ok(())
}

/// Levels the filter on the first accelerometer sample (yaw = 0, bias = 0).
/// The attitude prior covers tilt only.
pub fn ekf_init(first_accel: &Vector3<f64>, cfg: &EkfConfig) -> Result<(EkfState, Covariance6)> {
    check_finite3("accel", first_accel)?;
    let n = first_accel.norm();
    if n == 0.0 {
        return Err(Error::Init("accelerometer reading has zero norm".into()));
    }
    let a = first_accel / n;
    let roll = a.y.atan2(a.z);
    let pitch = (-a.x).atan2((a.y * a.y + a.z * a.z).sqrt());
    let state = EkfState {
        q: Quaternion::from_euler_zyx(0.0, pitch, roll),
        bias: Vector3::zeros(),
    };
    // yaw is zero by definition, so only tilt is uncertain
    let g = predicted_gravity(&state.q);
    let va = cfg.initial_attitude_std * cfg.initial_attitude_std;
    let vb = cfg.initial_bias_std * cfg.initial_bias_std;
    let mut p = Covariance6::from_diagonal(&Vector6::new(0.0, 0.0, 0.0, vb, vb, vb));
    p.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&((Matrix3::identity() - g * g.transpose()) * va));
    Ok((state, p))
}

pub fn ekf_propagate(
    state: &EkfState,
    p: &Covariance6,
    gyro_meas: &Vector3<f64>,
    dt: f64,
    cfg: &EkfConfig,
) -> Result<(EkfState, Covariance6)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    check_finite3("gyro", gyro_meas)?;
    check_state(state, p)?;

    let omega = gyro_meas - state.bias;
    let q = (state.q * Quaternion::from_rotation_vector(omega * dt)).normalize();

    let mut f = Covariance6::identity();
    f.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(Matrix3::identity() - skew(&omega) * dt));
    f.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-Matrix3::identity() * dt));

    let qg = cfg.gyro_noise_density * cfg.gyro_noise_density * dt;
    let qb = cfg.bias_random_walk * cfg.bias_random_walk * dt;
    let noise = Covariance6::from_diagonal(&Vector6::new(qg, qg, qg, qb, qb, qb));

    let p_next = symmetrize(&(f * p * f.transpose() + noise));
    Ok((
        EkfState {
            q,
            bias: state.bias,
        },
        p_next,
    ))
}

/// Predicted unit gravity direction in the sensor frame.
pub fn predicted_gravity(q: &Quaternion) -> Vector3<f64> {
    q.inverse_rotate(&Vector3::z())
}

pub fn ekf_update(
    state: &EkfState,
    p: &Covariance6,
    accel_meas: &Vector3<f64>,
    cfg: &EkfConfig,
) -> Result<UpdateOutcome> {
    check_finite3("accel", accel_meas)?;
    check_state(state, p)?;

    let rejected = UpdateOutcome {
        state: *state,
        cov: *p,
        accepted: false,
        correction: None,
    };
    let norm = accel_meas.norm();
    let g = cfg.gravity_magnitude;
    if (norm - g).abs() / g > cfg.accel_gate {
        return Ok(rejected);
    }
    if norm == 0.0 {
        return Err(Error::NonFinite("zero accelerometer reading with gating disabled".into()));
    }

    let z = accel_meas / norm;
    let g_pred = predicted_gravity(&state.q);
    let residual = z - g_pred;

    let mut h = SMatrix::<f64, 3, 6>::zeros();
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&g_pred));

    let r = Matrix3::identity() * cfg.measurement_variance();
    let s = h * p * h.transpose() + r;
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
    if !s_inv.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularInnovation);
    }
    let k = p * h.transpose() * s_inv;
    let dx = k * residual;
    let correction = EkfErrorState::from_vector(&dx);

    let q = (state.q * error_quat(&correction.delta_theta)).normalize();
    let bias = state.bias + correction.delta_bias;
    let p_next = symmetrize(&((Covariance6::identity() - k * h) * p));

    Ok(UpdateOutcome {
        state: EkfState { q, bias },
        cov: p_next,
        accepted: true,
        correction: Some(correction),
    })
}

/// Runs the filter over a whole stream: one propagation per sample interval
/// (trapezoidal gyro average) and one gated update per sample.
pub fn estimate_orientation(stream: &SensorStream, cfg: &EkfConfig) -> Result<OrientationTrack> {
    cfg.validate()?;
    if stream.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{} stream needs at least 2 samples, has {}",
            stream.sensor,
            stream.len()
        )));
    }
    let dt = stream.dt();
    let accel = |i: usize| Vector3::from(stream.samples[i].accel);
    let gyro = |i: usize| Vector3::from(stream.samples[i].gyro);

    let (mut state, mut p) = ekf_init(&accel(0), cfg).map_err(|e| e.at_sample(0))?;
    let mut quats = Vec::with_capacity(stream.len());
    let mut biases = Vec::with_capacity(stream.len());

    for i in 0..stream.len() {
        if i > 0 {
            let omega = (gyro(i - 1) + gyro(i)) * 0.5;
            (state, p) = ekf_propagate(&state, &p, &omega, dt, cfg).map_err(|e| e.at_sample(i))?;
        }
        match ekf_update(&state, &p, &accel(i), cfg) {
            Ok(out) => {
                state = out.state;
                p = out.cov;
            }
            Err(Error::SingularInnovation) => {
                log::debug!("{} sample {i}: singular innovation, update skipped", stream.sensor);
            }
            Err(e) => return Err(e.at_sample(i)),
        }
        quats.push(state.q);
        biases.push([state.bias.x, state.bias.y, state.bias.z]);
    }

    Ok(OrientationTrack {
        sensor: stream.sensor,
        quats,
        biases,
    })
}

/// `index,qx,qy,qz,qw,bx,by,bz` rows.
pub fn write_orientation_track<W: Write>(track: &OrientationTrack, writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["index", "qx", "qy", "qz", "qw", "bx", "by", "bz"])?;
    for (i, (q, b)) in track.quats.iter().zip(&track.biases).enumerate() {
        wtr.write_record([
            i.to_string(),
            q.x.to_string(),
            q.y.to_string(),
            q.z.to_string(),
            q.w.to_string(),
            b[0].to_string(),
            b[1].to_string(),
            b[2].to_string(),
        ])?;
    }
    wtr.flush()
}
