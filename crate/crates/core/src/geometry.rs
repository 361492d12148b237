//! Stroke-quality parameters from annotated video measurements.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Determinant magnitude below which two image lines count as parallel.
pub const PARALLEL_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_FPS: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableDims {
    pub length_cm: f64,
    pub width_cm: f64,
    pub net_height_cm: f64,
    pub ball_diameter_cm: f64,
}

impl Default for TableDims {
    fn default() -> Self {
        TableDims {
            length_cm: 275.0,
            width_cm: 152.5,
            net_height_cm: 15.25,
            ball_diameter_cm: 4.0,
        }
    }
}

impl TableDims {
    pub fn validate(&self) -> Result<()> {
        let all = [self.length_cm, self.width_cm, self.net_height_cm, self.ball_diameter_cm];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("table dimensions must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        PixelPoint { u, v }
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Image-space construction for one bounce.
///
/// The two table edge lines converge at the vanishing point V. A and C are
/// the ends of the across-table reference segment, D is the ball and E the
/// along-table reference point on line DV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BounceAnnotation {
    pub edge_line_1: (PixelPoint, PixelPoint),
    pub edge_line_2: (PixelPoint, PixelPoint),
    pub ball: PixelPoint,
    pub across_ref: (PixelPoint, PixelPoint),
    pub net_ref: PixelPoint,
}

/// Pixel distances consumed by [`bounce_x`] and [`bounce_y`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelDistances {
    pub d1: f64,
    pub d2: f64,
    pub de: f64,
    pub be: f64,
    pub dv: f64,
    pub bv: f64,
}

impl BounceAnnotation {
    pub fn vanishing_point(&self) -> Result<PixelPoint> {
        intersect_lines(self.edge_line_1, self.edge_line_2)
    }

    pub fn distances(&self) -> Result<PixelDistances> {
        for (a, b) in [self.edge_line_1, self.edge_line_2, self.across_ref] {
            if a == b {
                return Err(Error::Geometry(format!("line endpoints coincide at ({}, {})", a.u, a.v)));
            }
        }
        let v = self.vanishing_point()?;
        let d = self.ball;
        if d == v {
            return Err(Error::Geometry("ball point coincides with the vanishing point".into()));
        }
        let (a, c) = self.across_ref;
        let b = intersect_lines((a, c), (d, v))?;
        let e = self.net_ref;
        Ok(PixelDistances {
            d1: a.distance(&b),
            d2: b.distance(&c),
            de: d.distance(&e),
            be: b.distance(&e),
            dv: d.distance(&v),
            bv: b.distance(&v),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeParameters {
    pub bounce_x_cm: f64,
    pub bounce_y_cm: f64,
    pub net_clearance_cm: f64,
    pub ball_speed_mps: f64,
    pub height_ratio: f64,
}

impl StrokeParameters {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.bounce_x_cm,
            self.bounce_y_cm,
            self.net_clearance_cm,
            self.ball_speed_mps,
            self.height_ratio,
        ]
    }

    /// True when the ball crossed below net height.
    pub fn sub_net(&self) -> bool {
        self.net_clearance_cm < 0.0
    }
}

/// Per-stroke measurement record as stored in a participant's measurement file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrokeMeasurement {
    pub person_id: String,
    pub stroke_index: usize,
    pub d1_px: f64,
    pub d2_px: f64,
    pub de_px: f64,
    pub be_px: f64,
    pub dv_px: f64,
    pub bv_px: f64,
    pub h_ball_cm: f64,
    pub d_ball_m: f64,
    pub n_frames: u32,
    pub h0_cm: f64,
    pub h1_cm: f64,
}

pub fn intersect_lines(l1: (PixelPoint, PixelPoint), l2: (PixelPoint, PixelPoint)) -> Result<PixelPoint> {
    let (p, p2) = l1;
    let (q, q2) = l2;
    let r = (p2.u - p.u, p2.v - p.v);
    let s = (q2.u - q.u, q2.v - q.v);
    let det = r.0 * s.1 - r.1 * s.0;
    if det.abs() < PARALLEL_TOLERANCE {
        return Err(Error::Geometry(format!(
            "lines are parallel (determinant {det:e}); vanishing point at infinity"
        )));
    }
    let t = ((q.u - p.u) * s.1 - (q.v - p.v) * s.0) / det;
    Ok(PixelPoint::new(p.u + t * r.0, p.v + t * r.1))
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{name} input {values:?}")))
    }
}

/// Across-table bounce coordinate: `W · d1 / (d1 + d2)`.
pub fn bounce_x(d1: f64, d2: f64, dims: &TableDims) -> Result<f64> {
    check_finite("bounce_x", &[d1, d2])?;
    if d1 < 0.0 || d2 < 0.0 {
        return Err(Error::Geometry(format!("negative pixel distance (d1 = {d1}, d2 = {d2})")));
    }
    if d1 + d2 == 0.0 {
        return Err(Error::Geometry("d1 + d2 is zero".into()));
    }
    Ok(dims.width_cm * d1 / (d1 + d2))
}

/// Along-table bounce coordinate from the cross ratio `(DE·BV)/(BE·DV) · L`.
pub fn bounce_y(de: f64, be: f64, dv: f64, bv: f64, dims: &TableDims) -> Result<f64> {
    check_finite("bounce_y", &[de, be, dv, bv])?;
    if be <= 0.0 || dv <= 0.0 {
        return Err(Error::Geometry(format!("zero denominator in cross ratio (be = {be}, dv = {dv})")));
    }
    Ok(de * bv / (be * dv) * dims.length_cm)
}

/// Height of the ball over the net; negative means below net height.
pub fn net_clearance(h_ball_cm: f64, dims: &TableDims) -> f64 {
    h_ball_cm - dims.net_height_cm
}

/// Distance covered over `n_frames` at `fps`, in m/s.
pub fn ball_speed(d_ball_m: f64, n_frames: u32, fps: f64) -> Result<f64> {
    check_finite("ball_speed", &[d_ball_m, fps])?;
    if n_frames == 0 || fps <= 0.0 || d_ball_m < 0.0 {
        return Err(Error::Geometry(format!(
            "ball speed needs d >= 0, n_frames >= 1, fps > 0 (got {d_ball_m}, {n_frames}, {fps})"
        )));
    }
    Ok(d_ball_m / (f64::from(n_frames) / fps))
}

/// `1 − h1/h0`.
pub fn height_ratio(h0_cm: f64, h1_cm: f64) -> Result<f64> {
    check_finite("height_ratio", &[h0_cm, h1_cm])?;
    if h0_cm <= 0.0 {
        return Err(Error::Geometry(format!("h0 must be positive, got {h0_cm}")));
    }
    Ok(1.0 - h1_cm / h0_cm)
}

pub fn extract_parameters(m: &StrokeMeasurement, dims: &TableDims, fps: f64) -> Result<StrokeParameters> {
    let inner = || -> Result<StrokeParameters> {
        check_finite("h_ball_cm", &[m.h_ball_cm])?;
        Ok(StrokeParameters {
            bounce_x_cm: bounce_x(m.d1_px, m.d2_px, dims)?,
            bounce_y_cm: bounce_y(m.de_px, m.be_px, m.dv_px, m.bv_px, dims)?,
            net_clearance_cm: net_clearance(m.h_ball_cm, dims),
            ball_speed_mps: ball_speed(m.d_ball_m, m.n_frames, fps)?,
            height_ratio: height_ratio(m.h0_cm, m.h1_cm)?,
        })
    };
    inner().map_err(|e| {
        Error::Geometry(format!("stroke {}/{}: {e}", m.person_id, m.stroke_index))
    })
}

/// Reads a JSON array of [`StrokeMeasurement`] records. Missing or unknown
/// fields are schema errors.
pub fn load_measurements(path: &Path) -> Result<Vec<StrokeMeasurement>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_measurements(&text).map_err(|e| match e {
        Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

pub fn parse_measurements(text: &str) -> Result<Vec<StrokeMeasurement>> {
    serde_json::from_str(text).map_err(|e| {
        if e.is_data() {
            Error::Schema(e.to_string())
        } else {
            Error::Parse {
                path: Default::default(),
                line: e.line() as u64,
                message: e.to_string(),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(u: f64, v: f64) -> PixelPoint {
        PixelPoint::new(u, v)
    }

    fn fixture() -> StrokeMeasurement {
        StrokeMeasurement {
            person_id: "p1".into(),
            stroke_index: 7,
            d1_px: 30.0,
            d2_px: 10.0,
            de_px: 40.0,
            be_px: 80.0,
            dv_px: 200.0,
            bv_px: 240.0,
            h_ball_cm: 20.0,
            d_ball_m: 1.0,
            n_frames: 3,
            h0_cm: 100.0,
            h1_cm: 80.0,
        }
    }

    #[test]
    fn intersect_examples() {
        let o = intersect_lines((p(-1.0, 0.0), p(1.0, 0.0)), (p(0.0, -1.0), p(0.0, 3.0))).unwrap();
        assert_eq!(o, p(0.0, 0.0));
        let x = intersect_lines((p(0.0, 0.0), p(2.0, 2.0)), (p(0.0, 2.0), p(2.0, 0.0))).unwrap();
        assert!((x.u - 1.0).abs() < 1e-15 && (x.v - 1.0).abs() < 1e-15);
        assert!(matches!(
            intersect_lines((p(0.0, 0.0), p(1.0, 0.0)), (p(0.0, 1.0), p(5.0, 1.0))),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn bounce_x_examples() {
        let d = TableDims::default();
        assert_eq!(bounce_x(5.0, 5.0, &d).unwrap(), 76.25);
        assert_eq!(bounce_x(0.0, 5.0, &d).unwrap(), 0.0);
        assert_eq!(bounce_x(30.0, 10.0, &d).unwrap(), 114.375);
        assert!(bounce_x(0.0, 0.0, &d).is_err());
    }

    #[test]
    fn bounce_y_examples() {
        let d = TableDims::default();
        assert_eq!(bounce_y(0.0, 10.0, 20.0, 5.0, &d).unwrap(), 0.0);
        assert_eq!(bounce_y(12.0, 12.0, 33.0, 33.0, &d).unwrap(), 275.0);
        assert!(bounce_y(1.0, 0.0, 1.0, 1.0, &d).is_err());
        assert!(bounce_y(1.0, 1.0, 0.0, 1.0, &d).is_err());
    }

    #[test]
    fn scalar_examples() {
        let d = TableDims::default();
        assert_eq!(net_clearance(15.25, &d), 0.0);
        assert_eq!(net_clearance(20.0, &d), 4.75);
        assert_eq!(net_clearance(10.0, &d), -5.25);
        assert!((ball_speed(1.0, 3, 60.0).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(ball_speed(0.0, 3, 60.0).unwrap(), 0.0);
        assert!((ball_speed(0.5, 1, 60.0).unwrap() - 30.0).abs() < 1e-12);
        assert!(ball_speed(1.0, 0, 60.0).is_err());
        assert_eq!(height_ratio(50.0, 50.0).unwrap(), 0.0);
        assert_eq!(height_ratio(50.0, 0.0).unwrap(), 1.0);
        assert!((height_ratio(100.0, 80.0).unwrap() - 0.2).abs() < 1e-15);
        assert!(height_ratio(0.0, 1.0).is_err());
    }

    #[test]
    fn extract_fixture() {
        let m = fixture();
        let s = extract_parameters(&m, &TableDims::default(), DEFAULT_FPS).unwrap();
        let r = (40.0 * 240.0) / (80.0 * 200.0);
        assert_eq!(s.bounce_x_cm, 114.375);
        assert!((s.bounce_y_cm - 275.0 * r).abs() < 1e-12);
        assert_eq!(s.net_clearance_cm, 4.75);
        assert!((s.ball_speed_mps - 20.0).abs() < 1e-12);
        assert!((s.height_ratio - 0.2).abs() < 1e-15);
        assert!(!s.sub_net());
    }

    #[test]
    fn extract_error_names_stroke() {
        let mut m = fixture();
        m.be_px = 0.0;
        let msg = extract_parameters(&m, &TableDims::default(), DEFAULT_FPS).unwrap_err().to_string();
        assert!(msg.contains("p1/7"), "{msg}");
    }

    #[test]
    fn missing_field_is_schema_error() {
        let mut v = serde_json::to_value(vec![fixture()]).unwrap();
        v[0].as_object_mut().unwrap().remove("h_ball_cm");
        let err = parse_measurements(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("h_ball_cm")), "{err}");
        let round = parse_measurements(&serde_json::to_string(&vec![fixture()]).unwrap()).unwrap();
        assert_eq!(round, vec![fixture()]);
    }

    #[test]
    fn annotation_distances() {
        // edges converge at (0, 0); AC horizontal at v = 100; ball on the centre line
        let ann = BounceAnnotation {
            edge_line_1: (p(-100.0, 100.0), p(0.0, 0.0)),
            edge_line_2: (p(100.0, 100.0), p(0.0, 0.0)),
            ball: p(0.0, 50.0),
            across_ref: (p(-100.0, 100.0), p(100.0, 100.0)),
            net_ref: p(0.0, 25.0),
        };
        let d = ann.distances().unwrap();
        assert!((d.d1 - 100.0).abs() < 1e-12 && (d.d2 - 100.0).abs() < 1e-12);
        assert!((d.bv - 100.0).abs() < 1e-12 && (d.dv - 50.0).abs() < 1e-12);
        assert!((d.be - 75.0).abs() < 1e-12 && (d.de - 25.0).abs() < 1e-12);
    }
}
