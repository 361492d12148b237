//! Raw IMU record ingestion: per-sensor CSV parsing, stream alignment and
//! splitting of a session into per-stroke realizations.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Sampling rate of the wearable modules, Hz.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 64.0;

/// Header every IMU record file starts with.
pub const SENSOR_FILE_HEADER: [&str; 7] = ["index", "ax", "ay", "az", "gx", "gy", "gz"];

/// Placement of an IMU module on the dominant arm, distal to proximal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorId {
    Wrist,
    Forearm,
    Biceps,
    Shoulder,
}

impl SensorId {
    pub const ALL: [SensorId; 4] = [
        SensorId::Wrist,
        SensorId::Forearm,
        SensorId::Biceps,
        SensorId::Shoulder,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorId::Wrist => "wrist",
            SensorId::Forearm => "forearm",
            SensorId::Biceps => "biceps",
            SensorId::Shoulder => "shoulder",
        }
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One accelerometer + gyroscope sample in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub sample_index: u64,
    /// m/s²
    pub accel: [f64; 3],
    /// rad/s
    pub gyro: [f64; 3],
}

impl ImuSample {
    pub fn is_finite(&self) -> bool {
        self.accel.iter().chain(self.gyro.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorStream {
    pub sensor: SensorId,
    pub samples: Vec<ImuSample>,
    pub sample_rate_hz: f64,
}

impl SensorStream {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }
}

/// Conversion from file counts to SI units: `si = count * factor`.
///
/// The default matches an MPU6050 at ±2 g / ±250 °/s full scale
/// (datasheet sensitivities 16384 LSB/g and 131 LSB/(°/s)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnitScale {
    /// m/s² per accelerometer count.
    pub accel: f64,
    /// rad/s per gyroscope count.
    pub gyro: f64,
}

impl UnitScale {
    /// Scale from sensor sensitivities in LSB/g and LSB/(°/s).
    pub fn from_sensitivity(accel_lsb_per_g: f64, gyro_lsb_per_dps: f64) -> Self {
        UnitScale {
            accel: STANDARD_GRAVITY / accel_lsb_per_g,
            gyro: std::f64::consts::PI / 180.0 / gyro_lsb_per_dps,
        }
    }

    /// Files already hold m/s² and rad/s.
    pub fn si() -> Self {
        UnitScale {
            accel: 1.0,
            gyro: 1.0,
        }
    }
}

impl Default for UnitScale {
    fn default() -> Self {
        UnitScale::from_sensitivity(16384.0, 131.0)
    }
}

/// One stroke cycle: the four sensor streams cut to the same sample window.
#[derive(Debug, Clone, PartialEq)]
pub struct ImuRealization {
    pub person_id: String,
    pub stroke_index: usize,
    /// Indexed by [`SensorId::index`].
    pub streams: [SensorStream; 4],
}

impl ImuRealization {
    pub fn len(&self) -> usize {
        self.streams[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stream(&self, sensor: SensorId) -> &SensorStream {
        &self.streams[sensor.index()]
    }
}

/// Stroke boundaries `[start, end)` in samples, as produced by the annotation tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationIndex {
    pub person_id: String,
    pub boundaries: Vec<(usize, usize)>,
}

impl AnnotationIndex {
    /// Checks `start < end` and that intervals are sorted and non-overlapping.
    pub fn validate(&self) -> Result<()> {
        let mut previous_end = 0usize;
        for (i, &(start, end)) in self.boundaries.iter().enumerate() {
            if start >= end {
                return Err(Error::Annotation(format!(
                    "{}: boundary {i} has start {start} >= end {end}",
                    self.person_id
                )));
            }
            if i > 0 && start < previous_end {
                return Err(Error::Annotation(format!(
                    "{}: boundary {i} ({start}, {end}) overlaps or precedes the previous one ending at {previous_end}",
                    self.person_id
                )));
            }
            previous_end = end;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorPaths {
    pub wrist: PathBuf,
    pub forearm: PathBuf,
    pub biceps: PathBuf,
    pub shoulder: PathBuf,
}

impl SensorPaths {
    pub fn get(&self, sensor: SensorId) -> &Path {
        match sensor {
            SensorId::Wrist => &self.wrist,
            SensorId::Forearm => &self.forearm,
            SensorId::Biceps => &self.biceps,
            SensorId::Shoulder => &self.shoulder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantFiles {
    pub person_id: String,
    pub sensors: SensorPaths,
    pub annotation: PathBuf,
    pub measurements: PathBuf,
}

fn default_expected_realizations() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub participants: Vec<ParticipantFiles>,
    #[serde(default = "default_expected_realizations")]
    pub expected_realizations: usize,
}

impl SessionManifest {
    pub fn validate(&self) -> Result<()> {
        if self.expected_realizations == 0 {
            return Err(Error::Schema("expected_realizations must be positive".into()));
        }
        let mut seen_people = std::collections::BTreeSet::new();
        for p in &self.participants {
            if !seen_people.insert(p.person_id.as_str()) {
                return Err(Error::Schema(format!(
                    "participant {} declared more than once",
                    p.person_id
                )));
            }
            let mut seen_paths = std::collections::BTreeSet::new();
            for sensor in SensorId::ALL {
                let path = p.sensors.get(sensor);
                if !seen_paths.insert(path) {
                    return Err(Error::Schema(format!(
                        "{}: sensor file {} is referenced by more than one sensor",
                        p.person_id,
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rewrites relative paths against `base`.
    pub fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for part in &mut self.participants {
            fix(&mut part.sensors.wrist);
            fix(&mut part.sensors.forearm);
            fix(&mut part.sensors.biceps);
            fix(&mut part.sensors.shoulder);
            fix(&mut part.annotation);
            fix(&mut part.measurements);
        }
    }
}

/// Reads a manifest and resolves its relative paths against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<SessionManifest> {
    let mut manifest: SessionManifest = read_json(path)?;
    manifest.validate()?;
    if let Some(dir) = path.parent() {
        manifest.resolve_relative_to(dir);
    }
    Ok(manifest)
}

pub fn load_annotation(path: &Path) -> Result<AnnotationIndex> {
    let ann: AnnotationIndex = read_json(path)?;
    ann.validate()?;
    Ok(ann)
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

pub fn parse_sensor_file(
    path: &Path,
    sensor: SensorId,
    scale: &UnitScale,
    sample_rate_hz: f64,
) -> Result<SensorStream> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_sensor_records(file, path, sensor, scale, sample_rate_hz)
}

/// Parses `index,ax,ay,az,gx,gy,gz` rows. `origin` is only used in error messages.
pub fn parse_sensor_records<R: Read>(
    reader: R,
    origin: &Path,
    sensor: SensorId,
    scale: &UnitScale,
    sample_rate_hz: f64,
) -> Result<SensorStream> {
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().ne(SENSOR_FILE_HEADER.iter().copied()) {
        return Err(parse_err(
            1,
            format!(
                "expected header `{}`, found `{}`",
                SENSOR_FILE_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut samples = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut previous: Option<u64> = None;
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 7 {
            return Err(parse_err(
                line,
                format!("expected 7 columns, found {}", record.len()),
            ));
        }
        let index: u64 = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid sample index `{}`", &record[0])))?;
        let mut values = [0.0f64; 6];
        for (slot, (name, field)) in values
            .iter_mut()
            .zip(SENSOR_FILE_HEADER[1..].iter().zip(record.iter().skip(1)))
        {
            *slot = field
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("column {name}: `{field}` is not a number")))?;
        }
        if let Some(prev) = previous {
            if index <= prev {
                return Err(Error::Ordering {
                    path: origin.to_path_buf(),
                    line,
                    index,
                    previous: prev,
                });
            }
        }
        previous = Some(index);
        samples.push(ImuSample {
            sample_index: index,
            accel: [
                values[0] * scale.accel,
                values[1] * scale.accel,
                values[2] * scale.accel,
            ],
            gyro: [
                values[3] * scale.gyro,
                values[4] * scale.gyro,
                values[5] * scale.gyro,
            ],
        });
    }

    Ok(SensorStream {
        sensor,
        samples,
        sample_rate_hz,
    })
}

/// Writes a stream back in file counts (`count = si / factor`).
pub fn write_sensor_records<W: Write>(
    stream: &SensorStream,
    scale: &UnitScale,
    writer: W,
) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(SENSOR_FILE_HEADER)?;
    for s in &stream.samples {
        wtr.write_record([
            s.sample_index.to_string(),
            (s.accel[0] / scale.accel).to_string(),
            (s.accel[1] / scale.accel).to_string(),
            (s.accel[2] / scale.accel).to_string(),
            (s.gyro[0] / scale.gyro).to_string(),
            (s.gyro[1] / scale.gyro).to_string(),
            (s.gyro[2] / scale.gyro).to_string(),
        ])?;
    }
    wtr.flush()
}

pub fn write_sensor_file(stream: &SensorStream, scale: &UnitScale, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_sensor_records(stream, scale, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Truncates the four streams to their shortest common length and re-bases
/// sample indices at 0. Output is ordered by [`SensorId::index`].
pub fn align_streams(streams: [SensorStream; 4]) -> Result<[SensorStream; 4]> {
    let mut seen = [false; 4];
    for s in &streams {
        if std::mem::replace(&mut seen[s.sensor.index()], true) {
            return Err(Error::Alignment(format!("sensor {} supplied twice", s.sensor)));
        }
        if s.is_empty() {
            return Err(Error::Alignment(format!("{} stream is empty", s.sensor)));
        }
    }
    let len = streams.iter().map(SensorStream::len).min().unwrap_or(0);

    let mut ordered = streams;
    ordered.sort_by_key(|s| s.sensor.index());
    for s in &mut ordered {
        s.samples.truncate(len);
        for (i, sample) in s.samples.iter_mut().enumerate() {
            sample.sample_index = i as u64;
        }
    }
    Ok(ordered)
}

/// Cuts aligned streams into one realization per annotation interval.
pub fn split_realizations(
    streams: &[SensorStream; 4],
    ann: &AnnotationIndex,
) -> Result<Vec<ImuRealization>> {
    ann.validate()?;
    let len = streams.iter().map(SensorStream::len).min().unwrap_or(0);
    if streams.iter().any(|s| s.len() != len) {
        return Err(Error::Alignment("streams must be aligned before splitting".into()));
    }
    for (i, s) in streams.iter().enumerate() {
        if s.sensor.index() != i {
            return Err(Error::Alignment("streams must be in sensor order".into()));
        }
    }

    ann.boundaries
        .iter()
        .enumerate()
        .map(|(stroke_index, &(start, end))| {
            if end > len {
                return Err(Error::Range { start, end, len });
            }
            let cut = |s: &SensorStream| SensorStream {
                sensor: s.sensor,
                samples: s.samples[start..end].to_vec(),
                sample_rate_hz: s.sample_rate_hz,
            };
            Ok(ImuRealization {
                person_id: ann.person_id.clone(),
                stroke_index,
                streams: [
                    cut(&streams[0]),
                    cut(&streams[1]),
                    cut(&streams[2]),
                    cut(&streams[3]),
                ],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationLimits {
    pub min_length: usize,
    pub max_length: usize,
    /// rad/s; ‖gyro‖ above this is treated as saturation.
    pub gyro_saturation: f64,
}

impl Default for ValidationLimits {
    fn default() -> Self {
        ValidationLimits {
            min_length: 16,
            max_length: 4096,
            // 2000 °/s, the widest MPU6050 range
            gyro_saturation: 2000.0_f64.to_radians(),
        }
    }
}

const CHANNELS: [&str; 6] = ["ax", "ay", "az", "gx", "gy", "gz"];

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite {
        sensor: SensorId,
        sample: usize,
        channel: &'static str,
    },
    Length {
        length: usize,
        min: usize,
        max: usize,
    },
    GyroSaturation {
        sensor: SensorId,
        sample: usize,
        magnitude: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite {
                sensor,
                sample,
                channel,
            } => write!(f, "{sensor} sample {sample}: non-finite {channel}"),
            Violation::Length { length, min, max } => {
                write!(f, "length {length} outside [{min}, {max}]")
            }
            Violation::GyroSaturation {
                sensor,
                sample,
                magnitude,
            } => write!(f, "{sensor} sample {sample}: gyro magnitude {magnitude:.3} rad/s saturates"),
        }
    }
}

pub fn validate_realization(r: &ImuRealization, limits: &ValidationLimits) -> Vec<Violation> {
    let mut out = Vec::new();
    let len = r.len();
    if len < limits.min_length || len > limits.max_length {
        out.push(Violation::Length {
            length: len,
            min: limits.min_length,
            max: limits.max_length,
        });
    }
    for stream in &r.streams {
        for (i, s) in stream.samples.iter().enumerate() {
            let values = s.accel.iter().chain(s.gyro.iter());
            for (channel, v) in CHANNELS.iter().zip(values) {
                if !v.is_finite() {
                    out.push(Violation::NonFinite {
                        sensor: stream.sensor,
                        sample: i,
                        channel,
                    });
                }
            }
            let magnitude = s.gyro.iter().map(|g| g * g).sum::<f64>().sqrt();
            if magnitude.is_finite() && magnitude > limits.gyro_saturation {
                out.push(Violation::GyroSaturation {
                    sensor: stream.sensor,
                    sample: i,
                    magnitude,
                });
            }
        }
    }
    out
}
