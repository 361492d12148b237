//! Joint Euler angles from pairs of segment orientations, cycle-length
//! normalisation and per-cluster ensemble means.
//!
//! Euler convention: intrinsic Z-Y-X (yaw, pitch, roll), degrees, pitch in
//! [−90°, 90°]. Channel order everywhere is shoulder, elbow, wrist, each as
//! yaw, pitch, roll.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::attitude::{OrientationTrack, Quaternion};
use crate::error::{Error, Result};
use crate::ingest::SensorId;

pub const N_CHANNELS: usize = 9;

/// Default cycle length after resampling (0..100 % of a stroke).
pub const DEFAULT_CYCLE_LENGTH: usize = 101;

/// |pitch| above this is treated as gimbal lock.
pub const GIMBAL_LOCK_PITCH_DEG: f64 = 89.9;

pub const CHANNEL_NAMES: [&str; N_CHANNELS] = [
    "sh_yaw", "sh_pitch", "sh_roll", "el_yaw", "el_pitch", "el_roll", "wr_yaw", "wr_pitch",
    "wr_roll",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub gimbal_locked: bool,
}

impl EulerAngles {
    pub fn as_array(&self) -> [f64; 3] {
        [self.yaw, self.pitch, self.roll]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointAngleFrame {
    /// (yaw, pitch, roll), degrees
    pub shoulder: [f64; 3],
    pub elbow: [f64; 3],
    pub wrist: [f64; 3],
    /// Gimbal-lock flags for shoulder, elbow, wrist.
    #[serde(default)]
    pub gimbal_locked: [bool; 3],
}

impl JointAngleFrame {
    pub fn channels(&self) -> [f64; N_CHANNELS] {
        let mut out = [0.0; N_CHANNELS];
        out[0..3].copy_from_slice(&self.shoulder);
        out[3..6].copy_from_slice(&self.elbow);
        out[6..9].copy_from_slice(&self.wrist);
        out
    }

    pub fn from_channels(c: [f64; N_CHANNELS]) -> Self {
        JointAngleFrame {
            shoulder: [c[0], c[1], c[2]],
            elbow: [c[3], c[4], c[5]],
            wrist: [c[6], c[7], c[8]],
            gimbal_locked: [false; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAngleTrack {
    pub person_id: String,
    pub stroke_index: usize,
    pub frames: Vec<JointAngleFrame>,
}

impl JointAngleTrack {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn channel(&self, w: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f.channels()[w]).collect()
    }
}

/// Ensemble mean of a cluster's resampled tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEulerSignal {
    pub cluster_id: usize,
    /// One row per normalised-time sample, nine channels per row.
    pub samples: Vec<[f64; N_CHANNELS]>,
    pub n_q: usize,
}

impl MeanEulerSignal {
    pub fn cycle_length(&self) -> usize {
        self.samples.len()
    }

    pub fn channel(&self, w: usize) -> Vec<f64> {
        self.samples.iter().map(|row| row[w]).collect()
    }
}

/// Distal orientation expressed in the proximal segment's frame: `q_p* ⊗ q_d`.
pub fn relative_orientation(q_proximal: &Quaternion, q_distal: &Quaternion) -> Quaternion {
    (q_proximal.conjugate() * *q_distal).normalize()
}

pub fn quat_to_euler(q: &Quaternion) -> EulerAngles {
    let r = q.normalize().to_rotation_matrix();
    let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin().to_degrees();
    if pitch.abs() > GIMBAL_LOCK_PITCH_DEG {
        // only yaw − roll (or yaw + roll) is defined; fold it all into yaw
        let yaw = (-r[(0, 1)]).atan2(r[(1, 1)]).to_degrees();
        return EulerAngles {
            yaw,
            pitch,
            roll: 0.0,
            gimbal_locked: true,
        };
    }
    EulerAngles {
        yaw: r[(1, 0)].atan2(r[(0, 0)]).to_degrees(),
        pitch,
        roll: r[(2, 1)].atan2(r[(2, 2)]).to_degrees(),
        gimbal_locked: false,
    }
}

/// Inverse of [`quat_to_euler`] for angles in degrees.
pub fn euler_to_quat(yaw: f64, pitch: f64, roll: f64) -> Quaternion {
    Quaternion::from_euler_zyx(yaw.to_radians(), pitch.to_radians(), roll.to_radians())
}

/// Adds multiples of 360° so consecutive samples never differ by more than 180°.
pub fn unwrap_degrees(values: &mut [f64]) {
    for i in 1..values.len() {
        let prev = values[i - 1];
        let d = values[i] - prev;
        if d.abs() > 180.0 {
            values[i] -= 360.0 * (d / 360.0).round();
        }
    }
}

/// Joint pairs (proximal, distal): shoulder ← (shoulder, biceps),
/// elbow ← (biceps, forearm), wrist ← (forearm, wrist).
pub const JOINT_PAIRS: [(SensorId, SensorId); 3] = [
    (SensorId::Shoulder, SensorId::Biceps),
    (SensorId::Biceps, SensorId::Forearm),
    (SensorId::Forearm, SensorId::Wrist),
];

/// Converts four segment tracks (indexed by [`SensorId::index`]) into
/// unwrapped joint angles.
pub fn joint_angles(
    tracks: &[OrientationTrack; 4],
    person_id: &str,
    stroke_index: usize,
) -> Result<JointAngleTrack> {
    for (i, t) in tracks.iter().enumerate() {
        if t.sensor.index() != i {
            return Err(Error::InvalidInput(format!(
                "orientation track {i} is for {} but {} was expected",
                t.sensor,
                SensorId::ALL[i]
            )));
        }
    }
    let len = tracks[0].len();
    if tracks.iter().any(|t| t.len() != len) {
        return Err(Error::InvalidInput(format!(
            "orientation tracks differ in length: {:?}",
            tracks.iter().map(OrientationTrack::len).collect::<Vec<_>>()
        )));
    }

    let mut channels: Vec<[f64; N_CHANNELS]> = Vec::with_capacity(len);
    let mut locks = Vec::with_capacity(len);
    for k in 0..len {
        let mut row = [0.0; N_CHANNELS];
        let mut lock = [false; 3];
        for (j, (prox, dist)) in JOINT_PAIRS.iter().enumerate() {
            let rel = relative_orientation(&tracks[prox.index()].quats[k], &tracks[dist.index()].quats[k]);
            let e = quat_to_euler(&rel);
            row[3 * j..3 * j + 3].copy_from_slice(&e.as_array());
            lock[j] = e.gimbal_locked;
        }
        channels.push(row);
        locks.push(lock);
    }

    for w in 0..N_CHANNELS {
        let mut col: Vec<f64> = channels.iter().map(|r| r[w]).collect();
        unwrap_degrees(&mut col);
        for (row, v) in channels.iter_mut().zip(col) {
            row[w] = v;
        }
    }

    let frames = channels
        .into_iter()
        .zip(locks)
        .map(|(c, lock)| JointAngleFrame {
            gimbal_locked: lock,
            ..JointAngleFrame::from_channels(c)
        })
        .collect();
    Ok(JointAngleTrack {
        person_id: person_id.to_string(),
        stroke_index,
        frames,
    })
}

/// Linear interpolation of every channel onto `k` uniform points of
/// normalised time in [0, 1]. Gimbal flags are taken from the nearest frame.
pub fn resample_track(track: &JointAngleTrack, k: usize) -> Result<JointAngleTrack> {
    let n = track.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "track {}/{} has {n} frames, need at least 2",
            track.person_id, track.stroke_index
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("resample length must be positive".into()));
    }
    let rows: Vec<[f64; N_CHANNELS]> = track.frames.iter().map(JointAngleFrame::channels).collect();
    let span = (n - 1) as f64;
    let frames = (0..k)
        .map(|i| {
            let pos = if k == 1 { 0.0 } else { i as f64 * span / (k - 1) as f64 };
            let lo = (pos.floor() as usize).min(n - 1);
            let hi = (lo + 1).min(n - 1);
            let t = pos - lo as f64;
            let mut c = [0.0; N_CHANNELS];
            for w in 0..N_CHANNELS {
                c[w] = if t == 0.0 {
                    rows[lo][w]
                } else {
                    rows[lo][w] + t * (rows[hi][w] - rows[lo][w])
                };
            }
            let nearest = if t < 0.5 { lo } else { hi };
            JointAngleFrame {
                gimbal_locked: track.frames[nearest].gimbal_locked,
                ..JointAngleFrame::from_channels(c)
            }
        })
        .collect();
    Ok(JointAngleTrack {
        person_id: track.person_id.clone(),
        stroke_index: track.stroke_index,
        frames,
    })
}

pub fn mean_euler_signal(cluster_id: usize, tracks: &[&JointAngleTrack]) -> Result<MeanEulerSignal> {
    let first = tracks
        .first()
        .ok_or_else(|| Error::InvalidInput(format!("cluster {cluster_id} has no tracks to average")))?;
    let k = first.len();
    if let Some(bad) = tracks.iter().find(|t| t.len() != k) {
        return Err(Error::InvalidInput(format!(
            "track {}/{} has length {} but {k} was expected",
            bad.person_id,
            bad.stroke_index,
            bad.len()
        )));
    }
    let n_q = tracks.len();
    let mut samples = vec![[0.0; N_CHANNELS]; k];
    for t in tracks {
        for (acc, frame) in samples.iter_mut().zip(&t.frames) {
            for (a, v) in acc.iter_mut().zip(frame.channels()) {
                *a += v;
            }
        }
    }
    let scale = 1.0 / n_q as f64;
    for row in &mut samples {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    Ok(MeanEulerSignal {
        cluster_id,
        samples,
        n_q,
    })
}

fn write_rows<W: Write>(rows: impl Iterator<Item = [f64; N_CHANNELS]>, writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["k"];
    header.extend(CHANNEL_NAMES);
    wtr.write_record(&header)?;
    for (k, row) in rows.enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        wtr.write_record(&rec)?;
    }
    wtr.flush()
}

/// `k,sh_yaw,...,wr_roll` rows.
pub fn write_joint_angle_track<W: Write>(track: &JointAngleTrack, writer: W) -> std::io::Result<()> {
    write_rows(track.frames.iter().map(JointAngleFrame::channels), writer)
}

pub fn write_mean_signal<W: Write>(signal: &MeanEulerSignal, writer: W) -> std::io::Result<()> {
    write_rows(signal.samples.iter().copied(), writer)
}
