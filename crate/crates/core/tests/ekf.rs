mod common;

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix6, Vector3};
use proptest::prelude::*;
use rand::Rng;
use strokebench_core::attitude::*;
use strokebench_core::ingest::STANDARD_GRAVITY;

use common::imu::{add_noise, constant_rate, FS};
use common::{rng, stationary_case, STATIONARY_BIAS};

#[test]
fn noiseless_quarter_turn_about_z() {
    // 90° over 2 s
    let n = 2 * FS as usize + 1;
    let (stream, truth) = constant_rate(Quaternion::IDENTITY, Vector3::new(0.0, 0.0, FRAC_PI_2 / 2.0), n);
    let track = estimate_orientation(&stream, &EkfConfig::default()).unwrap();
    let last = track.quats.last().unwrap();
    assert!(last.angle_to(truth.last().unwrap()).to_degrees() < 0.5);
    let expected = Quaternion::from_axis_angle(Vector3::z(), FRAC_PI_2);
    assert!(last.angle_to(&expected).to_degrees() < 0.5);
}

#[test]
fn noiseless_tilted_rotations() {
    let mut r = rng(21);
    for _ in 0..20 {
        let q0 = Quaternion::from_euler_zyx(0.0, r.random_range(-0.6..0.6), r.random_range(-0.6..0.6));
        let axis = Vector3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)).normalize();
        let n = 2 * FS as usize + 1;
        let (stream, truth) = constant_rate(q0, axis * (FRAC_PI_2 / 2.0), n);
        let track = estimate_orientation(&stream, &EkfConfig::default()).unwrap();
        let err = track.quats.last().unwrap().angle_to(truth.last().unwrap()).to_degrees();
        assert!(err < 0.5, "{err}");
    }
}

#[test]
fn stationary_bias_is_recovered() {
    let bias = Vector3::from(STATIONARY_BIAS);
    let mut rel = Vec::new();
    let mut rms = Vec::new();
    for seed in 0..40 {
        let (e, r) = stationary_case(500 + seed, bias);
        rel.push(e);
        rms.push(r);
    }
    rel.sort_by(f64::total_cmp);
    rms.sort_by(f64::total_cmp);
    assert!(rel[20] < 0.1, "median relative bias error {}", rel[20]);
    assert!(rms[20] < 2.0, "median rms {}", rms[20]);
    assert!(rms[39] < 4.0, "worst rms {}", rms[39]);
}

#[test]
fn gravity_aligned_zero_gyro_is_identity() {
    let (stream, _) = constant_rate(Quaternion::IDENTITY, Vector3::zeros(), 200);
    let track = estimate_orientation(&stream, &EkfConfig::default()).unwrap();
    assert!(track.quats.iter().all(|q| q.angle_to(&Quaternion::IDENTITY) < 1e-12));
}

#[test]
fn output_is_unit_and_deterministic() {
    let cfg = EkfConfig::default();
    let mut r = rng(3);
    let (mut stream, _) = constant_rate(Quaternion::IDENTITY, Vector3::new(0.3, -0.2, 1.0), 500);
    add_noise(&mut stream, &mut r, 0.05, 0.5, Vector3::new(0.01, 0.0, 0.02));
    let a = estimate_orientation(&stream, &cfg).unwrap();
    let b = estimate_orientation(&stream, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.quats.iter().all(|q| (q.norm() - 1.0).abs() < 1e-9 && q.w >= 0.0));
}

#[test]
fn covariance_stays_symmetric_psd() {
    let cfg = EkfConfig::default();
    let mut r = rng(4);
    let (mut state, mut p) = ekf_init(&Vector3::new(0.0, 0.0, STANDARD_GRAVITY), &cfg).unwrap();
    let min_eig = |p: &Matrix6<f64>| p.symmetric_eigen().eigenvalues.min();
    for step in 0..10_000 {
        let gyro = Vector3::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0), r.random_range(-5.0..5.0));
        (state, p) = ekf_propagate(&state, &p, &gyro, 1.0 / FS, &cfg).unwrap();
        let dir = Vector3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let accel = dir.normalize() * STANDARD_GRAVITY * r.random_range(0.9..1.1);
        let out = ekf_update(&state, &p, &accel, &cfg).unwrap();
        state = out.state;
        p = out.cov;
        assert_eq!(p, p.transpose(), "step {step}");
        assert!(min_eig(&p) > -1e-9, "step {step}: {}", min_eig(&p));
    }
}

fn gravity_error(q: &Quaternion, true_q: &Quaternion) -> f64 {
    predicted_gravity(q).angle(&predicted_gravity(true_q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn accepted_updates_never_increase_gravity_error(
        roll in -1.2..1.2f64, pitch in -1.2..1.2f64, yaw in -3.0..3.0f64,
        err in proptest::array::uniform3(-0.3..0.3f64),
    ) {
        let cfg = EkfConfig {
            accel_gate: f64::INFINITY,
            accel_noise_std: 1e-6,
            gyro_noise_density: 1e-9,
            bias_random_walk: 1e-9,
            ..EkfConfig::default()
        };
        let truth = Quaternion::from_euler_zyx(yaw, pitch, roll);
        let state = EkfState {
            q: (truth * Quaternion::from_rotation_vector(Vector3::from(err))).normalize(),
            bias: Vector3::zeros(),
        };
        let p = Matrix6::identity() * 0.05;
        let accel = truth.inverse_rotate(&Vector3::new(0.0, 0.0, STANDARD_GRAVITY));
        let out = ekf_update(&state, &p, &accel, &cfg).unwrap();
        prop_assert!(out.accepted);
        prop_assert!(gravity_error(&out.state.q, &truth) <= gravity_error(&state.q, &truth) + 1e-12);
    }
}
