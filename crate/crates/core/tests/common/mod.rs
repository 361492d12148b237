#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `per` Gaussian points around each centre.
pub fn blobs(rng: &mut ChaCha8Rng, centres: &[Vec<f64>], per: usize, std: f64) -> DMatrix<f64> {
    let d = centres[0].len();
    let noise = Normal::new(0.0, std).unwrap();
    let mut data = Vec::with_capacity(centres.len() * per * d);
    for c in centres {
        for _ in 0..per {
            for &x in c {
                data.push(x + noise.sample(rng));
            }
        }
    }
    DMatrix::from_row_slice(centres.len() * per, d, &data)
}

/// Random centres in [0, 1]^5, pairwise at least `min_dist` apart.
pub fn spread_centres(rng: &mut ChaCha8Rng, count: usize, min_dist: f64) -> Vec<Vec<f64>> {
    loop {
        let cs: Vec<Vec<f64>> = (0..count).map(|_| (0..5).map(|_| rng.random::<f64>()).collect()).collect();
        let ok = (0..count).all(|i| {
            (i + 1..count).all(|j| {
                cs[i].iter().zip(&cs[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= min_dist
            })
        });
        if ok {
            return cs;
        }
    }
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub mod imu {
    use nalgebra::Vector3;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use strokebench_core::attitude::Quaternion;
    use strokebench_core::ingest::{ImuSample, SensorId, SensorStream, STANDARD_GRAVITY};

    pub const FS: f64 = 64.0;

    /// True attitude `q0 ⊗ exp(ω t)` for a constant body rate, with the
    /// matching ideal gyro and accelerometer readings.
    pub fn constant_rate(q0: Quaternion, omega: Vector3<f64>, n: usize) -> (SensorStream, Vec<Quaternion>) {
        let truth: Vec<Quaternion> = (0..n)
            .map(|i| (q0 * Quaternion::from_rotation_vector(omega * (i as f64 / FS))).normalize())
            .collect();
        let samples = truth
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let a = q.inverse_rotate(&Vector3::new(0.0, 0.0, STANDARD_GRAVITY));
                ImuSample {
                    sample_index: i as u64,
                    accel: [a.x, a.y, a.z],
                    gyro: [omega.x, omega.y, omega.z],
                }
            })
            .collect();
        (
            SensorStream {
                sensor: SensorId::Wrist,
                samples,
                sample_rate_hz: FS,
            },
            truth,
        )
    }

    /// Adds white noise to a stream: per-sample gyro std is the density times √fs.
    pub fn add_noise(stream: &mut SensorStream, rng: &mut ChaCha8Rng, gyro_density: f64, accel_std: f64, bias: Vector3<f64>) {
        let g = Normal::new(0.0, gyro_density * FS.sqrt()).unwrap();
        let a = Normal::new(0.0, accel_std).unwrap();
        for s in &mut stream.samples {
            for k in 0..3 {
                s.gyro[k] += bias[k] + g.sample(rng);
                s.accel[k] += a.sample(rng);
            }
        }
    }
}

pub mod camera {
    use strokebench_core::geometry::{BounceAnnotation, PixelPoint, TableDims};

    /// Pinhole camera behind the near end line, looking down the table with
    /// a downward pitch and no yaw or roll. World: x across, y along, z up.
    #[derive(Debug, Clone, Copy)]
    pub struct Camera {
        pub x: f64,
        pub y: f64,
        pub height: f64,
        pub pitch: f64,
        pub focal: f64,
    }

    impl Camera {
        pub fn project(&self, x: f64, y: f64) -> PixelPoint {
            let (s, c) = self.pitch.sin_cos();
            let dx = x - self.x;
            let dy = y - self.y;
            let dz = -self.height;
            let depth = dy * c - dz * s;
            assert!(depth > 0.0, "point behind camera");
            let up = dy * s + dz * c;
            PixelPoint::new(640.0 + self.focal * dx / depth, 360.0 - self.focal * up / depth)
        }

        /// Annotation for a bounce at world `(x, y)`: reference segment on the
        /// near end line, reference point E on the far end line.
        pub fn annotate(&self, x: f64, y: f64, dims: &TableDims) -> BounceAnnotation {
            let (w, l) = (dims.width_cm, dims.length_cm);
            BounceAnnotation {
                edge_line_1: (self.project(0.0, 0.0), self.project(0.0, l)),
                edge_line_2: (self.project(w, 0.0), self.project(w, l)),
                ball: self.project(x, y),
                across_ref: (self.project(0.0, 0.0), self.project(w, 0.0)),
                net_ref: self.project(x, l),
            }
        }
    }

    pub fn random_camera(rng: &mut impl rand::Rng, dims: &TableDims) -> Camera {
        Camera {
            x: rng.random_range(-60.0..dims.width_cm + 60.0),
            y: rng.random_range(-400.0..-120.0),
            height: rng.random_range(80.0..300.0),
            pitch: rng.random_range(10f64..45.0).to_radians(),
            focal: rng.random_range(600.0..1600.0),
        }
    }
}

/// Minimum SSE over every labelling that uses all k labels.
pub fn exhaustive_optimum(points: &DMatrix<f64>, k: usize) -> f64 {
    let n = points.nrows();
    let d = points.ncols();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut used = vec![false; k];
        labels.iter().for_each(|&l| used[l] = true);
        if used.iter().all(|&u| u) {
            let mut total = 0.0;
            for q in 0..k {
                let members: Vec<usize> = (0..n).filter(|&i| labels[i] == q).collect();
                for c in 0..d {
                    let mean = members.iter().map(|&i| points[(i, c)]).sum::<f64>() / members.len() as f64;
                    total += members.iter().map(|&i| (points[(i, c)] - mean).powi(2)).sum::<f64>();
                }
            }
            best = best.min(total);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// Random resampled joint-angle track with values in ±180°.
pub fn random_track(rng: &mut ChaCha8Rng, k: usize, stroke_index: usize) -> strokebench_core::kinematics::JointAngleTrack {
    use strokebench_core::kinematics::{JointAngleFrame, JointAngleTrack};
    JointAngleTrack {
        person_id: "p".into(),
        stroke_index,
        frames: (0..k)
            .map(|_| {
                let mut c = [0.0; 9];
                c.iter_mut().for_each(|v| *v = rng.random_range(-180.0..180.0));
                JointAngleFrame::from_channels(c)
            })
            .collect(),
    }
}

/// One 10 s stationary stream with gyro bias `bias` (perpendicular to
/// gravity) and noise at the config defaults. Returns the relative bias
/// error at the last sample and the RMS attitude error in degrees.
pub fn stationary_case(seed: u64, bias: nalgebra::Vector3<f64>) -> (f64, f64) {
    use strokebench_core::attitude::{estimate_orientation, EkfConfig, Quaternion};
    let cfg = EkfConfig::default();
    let mut r = rng(seed);
    let n = 10 * imu::FS as usize;
    let (mut stream, truth) = imu::constant_rate(Quaternion::IDENTITY, nalgebra::Vector3::zeros(), n);
    imu::add_noise(&mut stream, &mut r, cfg.gyro_noise_density, cfg.accel_noise_std, bias);
    let track = estimate_orientation(&stream, &cfg).unwrap();
    let b = nalgebra::Vector3::from(*track.biases.last().unwrap());
    let sq: f64 = track.quats.iter().zip(&truth).map(|(a, t)| a.angle_to(t).powi(2)).sum();
    ((b - bias).norm() / bias.norm(), (sq / n as f64).sqrt().to_degrees())
}

pub const STATIONARY_BIAS: [f64; 3] = [0.04, -0.03, 0.0];
