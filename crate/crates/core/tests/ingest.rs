use std::path::Path;

use proptest::prelude::*;
use strokebench_core::ingest::*;
use strokebench_core::Error;

const ORIGIN: &str = "wrist.csv";

fn parse(text: &str, scale: &UnitScale) -> strokebench_core::Result<SensorStream> {
    parse_sensor_records(text.as_bytes(), Path::new(ORIGIN), SensorId::Wrist, scale, 64.0)
}

fn stream(sensor: SensorId, len: usize) -> SensorStream {
    SensorStream {
        sensor,
        samples: (0..len)
            .map(|i| ImuSample {
                sample_index: 100 + i as u64,
                accel: [0.1 * i as f64, 0.0, STANDARD_GRAVITY],
                gyro: [0.0, 0.01 * i as f64, 0.0],
            })
            .collect(),
        sample_rate_hz: 64.0,
    }
}

fn four(lens: [usize; 4]) -> [SensorStream; 4] {
    [
        stream(SensorId::Wrist, lens[0]),
        stream(SensorId::Forearm, lens[1]),
        stream(SensorId::Biceps, lens[2]),
        stream(SensorId::Shoulder, lens[3]),
    ]
}

fn ann(boundaries: Vec<(usize, usize)>) -> AnnotationIndex {
    AnnotationIndex {
        person_id: "p".into(),
        boundaries,
    }
}

#[test]
fn counts_convert_to_si() {
    let text = "index,ax,ay,az,gx,gy,gz\n\
                0,0,0,16384,0,0,0\n\
                1,8192,-16384,0,131,0,-262\n\
                2,1638.4,0,-4096,0,13.1,65.5\n";
    let s = parse(text, &UnitScale::default()).unwrap();
    assert_eq!(s.len(), 3);
    let deg = std::f64::consts::PI / 180.0;
    let expected = [
        ([0.0, 0.0, 9.80665], [0.0, 0.0, 0.0]),
        ([4.903325, -9.80665, 0.0], [deg, 0.0, -2.0 * deg]),
        ([0.980665, 0.0, -2.4516625], [0.0, 0.1 * deg, 0.5 * deg]),
    ];
    for (i, (sample, (a, g))) in s.samples.iter().zip(expected).enumerate() {
        assert_eq!(sample.sample_index, i as u64);
        for k in 0..3 {
            assert!((sample.accel[k] - a[k]).abs() < 1e-12, "row {i} accel {k}");
            assert!((sample.gyro[k] - g[k]).abs() < 1e-12, "row {i} gyro {k}");
        }
    }
}

#[test]
fn non_numeric_field_reports_line() {
    let err = parse("index,ax,ay,az,gx,gy,gz\n0,1,2,abc,4,5,6\n", &UnitScale::si()).unwrap_err();
    match &err {
        Error::Parse { path, line, message } => {
            assert_eq!(path, Path::new(ORIGIN));
            assert_eq!(*line, 2);
            assert!(message.contains("az"), "{message}");
        }
        other => panic!("unexpected error {other:?}"),
    }
    assert!(err.to_string().contains("wrist.csv:2"));
}

#[test]
fn header_only_is_empty() {
    let s = parse("index,ax,ay,az,gx,gy,gz\n", &UnitScale::si()).unwrap();
    assert!(s.is_empty());
}

#[test]
fn wrong_header_and_ordering_are_errors() {
    assert!(matches!(parse("i,ax,ay,az,gx,gy,gz\n", &UnitScale::si()), Err(Error::Parse { line: 1, .. })));
    let err = parse("index,ax,ay,az,gx,gy,gz\n0,0,0,0,0,0,0\n0,0,0,0,0,0,0\n", &UnitScale::si()).unwrap_err();
    assert!(matches!(err, Error::Ordering { line: 3, index: 0, previous: 0, .. }), "{err:?}");
}

#[test]
fn alignment_truncates_to_shortest() {
    let aligned = align_streams(four([100, 98, 100, 99])).unwrap();
    for (i, s) in aligned.iter().enumerate() {
        assert_eq!(s.len(), 98);
        assert_eq!(s.sensor.index(), i);
        assert_eq!(s.samples[0].sample_index, 0);
        assert_eq!(s.samples[97].sample_index, 97);
    }
    let again = align_streams(aligned.clone()).unwrap();
    assert_eq!(again, aligned);
}

#[test]
fn split_and_range_check() {
    let aligned = align_streams(four([128, 128, 128, 128])).unwrap();
    let parts = split_realizations(&aligned, &ann(vec![(0, 64), (64, 128)])).unwrap();
    assert_eq!(parts.len(), 2);
    assert_eq!(parts[0].len(), 64);
    assert_eq!(parts[1].stroke_index, 1);
    assert_eq!(parts[1].stream(SensorId::Biceps).samples[0], aligned[2].samples[64]);

    let err = split_realizations(&aligned, &ann(vec![(100, 130)])).unwrap_err();
    assert!(matches!(err, Error::Range { start: 100, end: 130, len: 128 }));

    let aligned = align_streams(four([5000, 5000, 5000, 5000])).unwrap();
    let bounds = (0..50).map(|i| (i * 100, i * 100 + 80)).collect();
    assert_eq!(split_realizations(&aligned, &ann(bounds)).unwrap().len(), 50);
}

#[test]
fn validation_reports_each_problem() {
    let aligned = align_streams(four([40, 40, 40, 40])).unwrap();
    let mut r = split_realizations(&aligned, &ann(vec![(0, 40)])).unwrap().remove(0);
    assert!(validate_realization(&r, &ValidationLimits::default()).is_empty());

    r.streams[1].samples[7].gyro[2] = f64::NAN;
    let v = validate_realization(&r, &ValidationLimits::default());
    assert_eq!(
        v,
        vec![Violation::NonFinite {
            sensor: SensorId::Forearm,
            sample: 7,
            channel: "gz"
        }]
    );

    let short = ValidationLimits {
        min_length: 50,
        ..ValidationLimits::default()
    };
    let v = validate_realization(&r, &short);
    assert!(v.contains(&Violation::Length { length: 40, min: 50, max: 4096 }));
}

fn sample_strategy() -> impl Strategy<Value = Vec<([f64; 3], [f64; 3])>> {
    let triple = || prop::array::uniform3(-30000.0f64..30000.0);
    prop::collection::vec((triple(), triple()), 0..40)
}

proptest! {
    #[test]
    fn write_then_parse_round_trips(rows in sample_strategy()) {
        let scale = UnitScale::default();
        let original = SensorStream {
            sensor: SensorId::Wrist,
            samples: rows
                .iter()
                .enumerate()
                .map(|(i, (a, g))| ImuSample {
                    sample_index: 3 * i as u64,
                    accel: a.map(|v| v * scale.accel),
                    gyro: g.map(|v| v * scale.gyro),
                })
                .collect(),
            sample_rate_hz: 64.0,
        };
        let mut buf = Vec::new();
        write_sensor_records(&original, &scale, &mut buf).unwrap();
        let parsed = parse(std::str::from_utf8(&buf).unwrap(), &scale).unwrap();
        prop_assert_eq!(parsed.len(), original.len());
        for (p, o) in parsed.samples.iter().zip(&original.samples) {
            prop_assert_eq!(p.sample_index, o.sample_index);
            for k in 0..3 {
                prop_assert!((p.accel[k] - o.accel[k]).abs() < 1e-9);
                prop_assert!((p.gyro[k] - o.gyro[k]).abs() < 1e-9);
            }
        }
    }
}
