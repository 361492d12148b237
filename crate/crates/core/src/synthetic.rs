//! Synthetic sessions with planted cluster structure, used for the bundled
//! fixture and for tests.
//!
//! Each stroke belongs to one of three styles. A style fixes both the arm
//! motion (joint-angle amplitudes) and the centre of the stroke's raw
//! quality parameters, so clusters in the performance space line up with
//! distinct mean Euler signals.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::attitude::Quaternion;
use crate::error::{Error, Result};
use crate::geometry::{StrokeMeasurement, StrokeParameters, TableDims};
use crate::ingest::{
    write_sensor_file, AnnotationIndex, ImuSample, ParticipantFiles, SensorId, SensorPaths,
    SensorStream, SessionManifest, UnitScale, DEFAULT_SAMPLE_RATE_HZ, STANDARD_GRAVITY,
};

pub const N_STYLES: usize = 3;

/// Raw parameter centres per style: bounce x, bounce y (cm), net clearance
/// (cm), speed (m/s), height ratio.
pub const STYLE_CENTRES: [[f64; 5]; N_STYLES] = [
    [72.0, 130.0, 6.0, 23.0, 0.10],
    [40.0, 60.0, 9.0, 15.0, 0.45],
    [10.0, 20.0, 0.0, 6.0, 0.80],
];

const PARAM_NOISE: [f64; 5] = [1.0, 2.0, 0.15, 0.4, 0.015];

/// Motion amplitude per style, relative to style 0.
pub const STYLE_AMPLITUDE: [f64; N_STYLES] = [1.0, 0.7, 0.45];

/// Joint (yaw, pitch, roll) amplitudes in degrees for shoulder, elbow, wrist.
const JOINT_AMPLITUDE: [[f64; 3]; 3] = [[25.0, 15.0, 10.0], [8.0, 25.0, 12.0], [10.0, 15.0, 15.0]];
/// Joint rest pitch in degrees.
const JOINT_REST_PITCH: [f64; 3] = [30.0, 40.0, 10.0];
const TORSO_YAW_AMPLITUDE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    /// Style of every stroke, one list per player.
    pub styles: Vec<Vec<usize>>,
    pub sample_rate_hz: f64,
    pub stroke_seconds: f64,
    pub rest_seconds: f64,
    pub accel_noise_std: f64,
    pub gyro_noise_std: f64,
    pub gyro_bias_std: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 2024,
            styles: vec![
                vec![0, 0, 0, 0, 0, 0, 1, 1, 1, 2],
                vec![0, 0, 0, 1, 1, 1, 1, 2, 2, 2],
                vec![0, 1, 1, 1, 2, 2, 2, 2, 2, 2],
            ],
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            stroke_seconds: 1.5,
            rest_seconds: 0.5,
            accel_noise_std: 0.02,
            gyro_noise_std: 0.002,
            gyro_bias_std: 0.005,
        }
    }
}

/// One player's generated data.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPlayer {
    pub person_id: String,
    pub streams: [SensorStream; 4],
    pub annotation: AnnotationIndex,
    pub measurements: Vec<StrokeMeasurement>,
    pub styles: Vec<usize>,
}

fn deg(v: f64) -> f64 {
    v.to_radians()
}

/// Stroke envelope: 0 at rest, 1 at mid-stroke.
fn envelope(t: f64, duration: f64) -> f64 {
    if (0.0..=duration).contains(&t) {
        (std::f64::consts::PI * t / duration).sin()
    } else {
        0.0
    }
}

/// World orientation of every segment, indexed by [`SensorId::index`].
fn segment_pose(s: f64, amp: f64) -> [Quaternion; 4] {
    let joint = |j: usize| {
        let a = JOINT_AMPLITUDE[j];
        Quaternion::from_euler_zyx(
            deg(amp * a[0] * s),
            deg(JOINT_REST_PITCH[j] + amp * a[1] * s),
            deg(amp * a[2] * s),
        )
    };
    let shoulder = Quaternion::from_euler_zyx(deg(amp * TORSO_YAW_AMPLITUDE * s), 0.0, 0.0);
    let biceps = (shoulder * joint(0)).normalize();
    let forearm = (biceps * joint(1)).normalize();
    let wrist = (forearm * joint(2)).normalize();
    let mut out = [Quaternion::IDENTITY; 4];
    out[SensorId::Wrist.index()] = wrist;
    out[SensorId::Forearm.index()] = forearm;
    out[SensorId::Biceps.index()] = biceps;
    out[SensorId::Shoulder.index()] = shoulder;
    out
}

fn rotation_vector(q: &Quaternion) -> Vector3<f64> {
    let q = q.normalize();
    let v = q.vector();
    let s = v.norm();
    if s < 1e-15 {
        return v * 2.0;
    }
    v * (2.0 * s.atan2(q.w) / s)
}

/// Raw parameters to the measurement record that reproduces them.
pub fn measurement_for(person_id: &str, stroke_index: usize, p: &StrokeParameters, dims: &TableDims, fps: f64) -> StrokeMeasurement {
    let d1 = 100.0 * p.bounce_x_cm / dims.width_cm;
    let n_frames = 3;
    StrokeMeasurement {
        person_id: person_id.to_string(),
        stroke_index,
        d1_px: d1,
        d2_px: 100.0 - d1,
        de_px: 100.0 * p.bounce_y_cm / dims.length_cm,
        be_px: 100.0,
        dv_px: 150.0,
        bv_px: 150.0,
        h_ball_cm: p.net_clearance_cm + dims.net_height_cm,
        d_ball_m: p.ball_speed_mps * f64::from(n_frames) / fps,
        n_frames,
        h0_cm: 100.0,
        h1_cm: 100.0 * (1.0 - p.height_ratio),
    }
}

pub fn generate(spec: &SyntheticSpec) -> Vec<SyntheticPlayer> {
    let rate = spec.sample_rate_hz;
    let dt = 1.0 / rate;
    let stroke_len = (spec.stroke_seconds * rate).round() as usize;
    let rest_len = (spec.rest_seconds * rate).round() as usize;
    let dims = TableDims::default();
    let accel_noise = Normal::new(0.0, spec.accel_noise_std).expect("valid std");
    let gyro_noise = Normal::new(0.0, spec.gyro_noise_std).expect("valid std");
    let bias_dist = Normal::new(0.0, spec.gyro_bias_std).expect("valid std");
    let g_world = Vector3::new(0.0, 0.0, STANDARD_GRAVITY);

    spec.styles
        .iter()
        .enumerate()
        .map(|(p, styles)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(p as u64);
            let person_id = format!("player{}", p + 1);
            let mut order = styles.clone();
            order.shuffle(&mut rng);

            // (start sample, amplitude) per stroke
            let mut strokes = Vec::with_capacity(order.len());
            let mut boundaries = Vec::with_capacity(order.len());
            let mut cursor = rest_len;
            for &style in &order {
                let amp = STYLE_AMPLITUDE[style] * (1.0 + 0.05 * rng.random_range(-1.0..1.0));
                strokes.push((cursor, amp));
                boundaries.push((cursor, cursor + stroke_len));
                cursor += stroke_len + rest_len;
            }
            let total = cursor;

            let pose_at = |t: f64| -> [Quaternion; 4] {
                for &(start, amp) in &strokes {
                    let t0 = start as f64 * dt;
                    let duration = stroke_len as f64 * dt;
                    if t >= t0 && t <= t0 + duration {
                        return segment_pose(envelope(t - t0, duration), amp);
                    }
                }
                segment_pose(0.0, 0.0)
            };

            let biases: Vec<Vector3<f64>> = (0..4)
                .map(|_| Vector3::new(bias_dist.sample(&mut rng), bias_dist.sample(&mut rng), bias_dist.sample(&mut rng)))
                .collect();
            let h = 1e-4;
            let mut samples: [Vec<ImuSample>; 4] = Default::default();
            for k in 0..total {
                let t = k as f64 * dt;
                let now = pose_at(t);
                let before = pose_at(t - h);
                let after = pose_at(t + h);
                for s in 0..4 {
                    let omega = rotation_vector(&(before[s].conjugate() * after[s])) / (2.0 * h);
                    let f = now[s].inverse_rotate(&g_world);
                    let noise3 = |rng: &mut ChaCha8Rng, d: &Normal<f64>| Vector3::new(d.sample(rng), d.sample(rng), d.sample(rng));
                    let accel = f + noise3(&mut rng, &accel_noise);
                    let gyro = omega + biases[s] + noise3(&mut rng, &gyro_noise);
                    samples[s].push(ImuSample {
                        sample_index: k as u64,
                        accel: [accel.x, accel.y, accel.z],
                        gyro: [gyro.x, gyro.y, gyro.z],
                    });
                }
            }
            let streams = std::array::from_fn(|s| SensorStream {
                sensor: SensorId::ALL[s],
                samples: std::mem::take(&mut samples[s]),
                sample_rate_hz: rate,
            });

            let measurements = order
                .iter()
                .enumerate()
                .map(|(i, &style)| {
                    let raw: Vec<f64> = STYLE_CENTRES[style]
                        .iter()
                        .zip(PARAM_NOISE)
                        .map(|(c, sd)| c + sd * rng.sample::<f64, _>(rand_distr::StandardNormal))
                        .collect();
                    let params = StrokeParameters {
                        bounce_x_cm: raw[0].clamp(0.5, dims.width_cm - 0.5),
                        bounce_y_cm: raw[1].max(0.5),
                        net_clearance_cm: raw[2],
                        ball_speed_mps: raw[3].max(0.1),
                        height_ratio: raw[4].clamp(0.0, 0.99),
                    };
                    measurement_for(&person_id, i, &params, &dims, crate::geometry::DEFAULT_FPS)
                })
                .collect();

            SyntheticPlayer {
                annotation: AnnotationIndex {
                    person_id: person_id.clone(),
                    boundaries,
                },
                person_id,
                streams,
                measurements,
                styles: order,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct FixtureConfig<'a> {
    manifest: &'a str,
    output_dir: &'a str,
    seed: u64,
    tsne: FixtureTsne,
}

#[derive(Serialize)]
struct FixtureTsne {
    perplexity: f64,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes sensor files (raw MPU counts), annotations, measurements, a
/// manifest, a pipeline config and the planted labels into `dir`. Returns
/// the config path.
pub fn write_fixture(dir: &Path, spec: &SyntheticSpec) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let scale = UnitScale::default();
    let players = generate(spec);
    let mut participants = Vec::new();
    let mut labels = String::from("person_id,stroke_index,style\n");
    for p in &players {
        let file = |suffix: &str| format!("{}_{suffix}", p.person_id);
        for s in &p.streams {
            write_sensor_file(s, &scale, &dir.join(file(&format!("{}.csv", s.sensor))))?;
        }
        write_json(&dir.join(file("annotation.json")), &p.annotation)?;
        write_json(&dir.join(file("measurements.json")), &p.measurements)?;
        participants.push(ParticipantFiles {
            person_id: p.person_id.clone(),
            sensors: SensorPaths {
                wrist: file("wrist.csv").into(),
                forearm: file("forearm.csv").into(),
                biceps: file("biceps.csv").into(),
                shoulder: file("shoulder.csv").into(),
            },
            annotation: file("annotation.json").into(),
            measurements: file("measurements.json").into(),
        });
        for (i, style) in p.styles.iter().enumerate() {
            labels.push_str(&format!("{},{i},{style}\n", p.person_id));
        }
    }
    let expected = spec.styles.iter().map(Vec::len).max().unwrap_or(1).max(1);
    write_json(
        &dir.join("manifest.json"),
        &SessionManifest {
            participants,
            expected_realizations: expected,
        },
    )?;
    let labels_path = dir.join("planted_styles.csv");
    fs::write(&labels_path, labels).map_err(|e| Error::io(&labels_path, e))?;
    let n: usize = spec.styles.iter().map(Vec::len).sum();
    let config_path = dir.join("config.json");
    write_json(
        &config_path,
        &FixtureConfig {
            manifest: "manifest.json",
            output_dir: "out",
            seed: 7,
            tsne: FixtureTsne {
                perplexity: (n as f64 / 4.0).clamp(2.0, 30.0),
            },
        },
    )?;
    Ok(config_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::extract_parameters;

    #[test]
    fn measurement_round_trip() {
        let dims = TableDims::default();
        let p = StrokeParameters {
            bounce_x_cm: 40.0,
            bounce_y_cm: 60.0,
            net_clearance_cm: -2.0,
            ball_speed_mps: 15.0,
            height_ratio: 0.45,
        };
        let m = measurement_for("a", 0, &p, &dims, 60.0);
        let back = extract_parameters(&m, &dims, 60.0).unwrap();
        for (a, b) in back.as_array().iter().zip(p.as_array()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_accel_is_gravity() {
        let spec = SyntheticSpec {
            styles: vec![vec![0]],
            ..Default::default()
        };
        let players = generate(&spec);
        let s = &players[0].streams[SensorId::Shoulder.index()];
        let a = s.samples[0].accel;
        assert!((Vector3::from(a).norm() - STANDARD_GRAVITY).abs() < 0.2);
        assert_eq!(players[0].annotation.boundaries.len(), 1);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::default();
        assert_eq!(generate(&spec), generate(&spec));
    }
}
