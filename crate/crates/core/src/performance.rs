//! Cost functions and radial-basis performance scores.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StrokeParameters;

pub const N_PARAMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterId {
    P1,
    P2,
    P3,
    P4,
    P5,
}

impl ParameterId {
    pub const ALL: [ParameterId; N_PARAMS] = [
        ParameterId::P1,
        ParameterId::P2,
        ParameterId::P3,
        ParameterId::P4,
        ParameterId::P5,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ParameterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.index() + 1)
    }
}

/// Shape of a cost function `J(raw)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostShape {
    /// `max_cost` at or below `lo`, zero at or above `hi`.
    LinearDecreasing { lo: f64, hi: f64, max_cost: f64 },
    /// Zero at or below `lo`, `max_cost` at or above `hi`.
    LinearIncreasing { lo: f64, hi: f64, max_cost: f64 },
    /// `(raw, cost)` knots sorted by raw value; clamped outside.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// `slope · |raw − target|`.
    TargetDeviation { target: f64, slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostFunctionSpec {
    pub parameter: ParameterId,
    #[serde(flatten)]
    pub shape: CostShape,
}

impl CostFunctionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("cost function {}: {msg}", self.parameter)));
        match &self.shape {
            CostShape::LinearDecreasing { lo, hi, max_cost } | CostShape::LinearIncreasing { lo, hi, max_cost } => {
                if !(lo.is_finite() && hi.is_finite() && max_cost.is_finite()) || hi <= lo {
                    return bad(format!("needs finite lo < hi and max_cost (got {lo}, {hi}, {max_cost})"));
                }
            }
            CostShape::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("no knots".into());
                }
                if knots.iter().any(|(x, c)| !x.is_finite() || !c.is_finite()) {
                    return bad("non-finite knot".into());
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return bad("knots must be strictly increasing in raw value".into());
                }
            }
            CostShape::TargetDeviation { target, slope } => {
                if !target.is_finite() || !slope.is_finite() {
                    return bad(format!("non-finite target or slope ({target}, {slope})"));
                }
            }
        }
        Ok(())
    }
}

/// Gaussian performance function `ψ0 · exp(−α²(c − μ)²)` with `ψ0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfSpec {
    pub parameter: ParameterId,
    pub alpha: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "one")]
    pub psi0: f64,
}

fn one() -> f64 {
    1.0
}

impl RbfSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) || !self.mu.is_finite() || self.psi0 != 1.0 {
            return Err(Error::InvalidInput(format!(
                "rbf {}: need alpha > 0, finite mu, psi0 = 1 (got {}, {}, {})",
                self.parameter, self.alpha, self.mu, self.psi0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceConfig {
    pub cost_functions: Vec<CostFunctionSpec>,
    pub rbf: Vec<RbfSpec>,
}

impl Default for PerformanceConfig {
    fn default() -> Self {
        use CostShape::*;
        let shapes = [
            LinearDecreasing { lo: 0.0, hi: 76.25, max_cost: 1.0 },
            LinearDecreasing { lo: 0.0, hi: 137.5, max_cost: 1.0 },
            TargetDeviation { target: 5.0, slope: 0.2 },
            LinearDecreasing { lo: 0.0, hi: 25.0, max_cost: 1.0 },
            LinearIncreasing { lo: 0.0, hi: 1.0, max_cost: 1.0 },
        ];
        PerformanceConfig {
            cost_functions: ParameterId::ALL
                .iter()
                .zip(shapes)
                .map(|(&parameter, shape)| CostFunctionSpec { parameter, shape })
                .collect(),
            rbf: ParameterId::ALL
                .iter()
                .map(|&parameter| RbfSpec {
                    parameter,
                    alpha: 1.5,
                    mu: 0.0,
                    psi0: 1.0,
                })
                .collect(),
        }
    }
}

impl PerformanceConfig {
    /// Checks every spec and that each parameter appears exactly once, in order.
    pub fn validate(&self) -> Result<()> {
        let ids = |v: Vec<ParameterId>| v == ParameterId::ALL;
        if !ids(self.cost_functions.iter().map(|c| c.parameter).collect()) {
            return Err(Error::InvalidInput("cost_functions must list p1..p5 once each, in order".into()));
        }
        if !ids(self.rbf.iter().map(|r| r.parameter).collect()) {
            return Err(Error::InvalidInput("rbf must list p1..p5 once each, in order".into()));
        }
        self.cost_functions.iter().try_for_each(CostFunctionSpec::validate)?;
        self.rbf.iter().try_for_each(RbfSpec::validate)
    }
}

/// A stroke's position in the performance space `[0, 1]^5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformancePoint {
    pub person_id: String,
    pub stroke_index: usize,
    pub scores: [f64; N_PARAMS],
}

/// The point of ideal performance, all ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealPoint {
    pub coordinates: [f64; N_PARAMS],
}

impl Default for IdealPoint {
    fn default() -> Self {
        IdealPoint {
            coordinates: [1.0; N_PARAMS],
        }
    }
}

fn ramp(raw: f64, lo: f64, hi: f64) -> f64 {
    ((raw - lo) / (hi - lo)).clamp(0.0, 1.0)
}

pub fn eval_cost(spec: &CostFunctionSpec, raw: f64) -> Result<f64> {
    if !raw.is_finite() {
        return Err(Error::NonFinite(format!("raw value {raw} for {}", spec.parameter)));
    }
    Ok(match &spec.shape {
        CostShape::LinearDecreasing { lo, hi, max_cost } => max_cost * (1.0 - ramp(raw, *lo, *hi)),
        CostShape::LinearIncreasing { lo, hi, max_cost } => max_cost * ramp(raw, *lo, *hi),
        CostShape::PiecewiseLinear { knots } => {
            let first = knots[0];
            let last = knots[knots.len() - 1];
            if raw <= first.0 {
                first.1
            } else if raw >= last.0 {
                last.1
            } else {
                let i = knots.partition_point(|k| k.0 <= raw) - 1;
                let (x0, c0) = knots[i];
                let (x1, c1) = knots[i + 1];
                c0 + (raw - x0) / (x1 - x0) * (c1 - c0)
            }
        }
        CostShape::TargetDeviation { target, slope } => slope * (raw - target).abs(),
    })
}

/// Score in (0, 1]. Far tails are held at the smallest positive double.
pub fn rbf_score(spec: &RbfSpec, cost: f64) -> f64 {
    let d = cost - spec.mu;
    (spec.psi0 * (-(spec.alpha * spec.alpha) * d * d).exp()).max(f64::MIN_POSITIVE)
}

pub fn map_stroke(
    params: &StrokeParameters,
    person_id: &str,
    stroke_index: usize,
    config: &PerformanceConfig,
) -> Result<PerformancePoint> {
    let raw = params.as_array();
    let mut scores = [0.0; N_PARAMS];
    for (i, s) in scores.iter_mut().enumerate() {
        let cost = eval_cost(&config.cost_functions[i], raw[i])
            .map_err(|e| Error::InvalidInput(format!("stroke {person_id}/{stroke_index}, {}: {e}", ParameterId::ALL[i])))?;
        *s = rbf_score(&config.rbf[i], cost);
    }
    Ok(PerformancePoint {
        person_id: person_id.to_string(),
        stroke_index,
        scores,
    })
}

/// `person_id,stroke_index,s1,...,s5` rows.
pub fn write_performance_points<W: Write>(points: &[PerformancePoint], writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["person_id", "stroke_index", "s1", "s2", "s3", "s4", "s5"])?;
    for p in points {
        let mut rec = vec![p.person_id.clone(), p.stroke_index.to_string()];
        rec.extend(p.scores.iter().map(f64::to_string));
        wtr.write_record(&rec)?;
    }
    wtr.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(shape: CostShape) -> CostFunctionSpec {
        CostFunctionSpec {
            parameter: ParameterId::P2,
            shape,
        }
    }

    fn rbf(alpha: f64, mu: f64) -> RbfSpec {
        RbfSpec {
            parameter: ParameterId::P1,
            alpha,
            mu,
            psi0: 1.0,
        }
    }

    fn optimal_params() -> StrokeParameters {
        StrokeParameters {
            bounce_x_cm: 80.0,
            bounce_y_cm: 140.0,
            net_clearance_cm: 5.0,
            ball_speed_mps: 30.0,
            height_ratio: 0.0,
        }
    }

    #[test]
    fn cost_examples() {
        let s = spec(CostShape::LinearDecreasing { lo: 0.0, hi: 137.5, max_cost: 1.0 });
        assert_eq!(eval_cost(&s, 137.5).unwrap(), 0.0);
        assert_eq!(eval_cost(&s, 68.75).unwrap(), 0.5);
        assert_eq!(eval_cost(&s, -10.0).unwrap(), 1.0);
        let t = spec(CostShape::TargetDeviation { target: 0.0, slope: 1.0 });
        assert_eq!(eval_cost(&t, 3.0).unwrap(), 3.0);
        assert!(eval_cost(&t, f64::NAN).is_err());
    }

    #[test]
    fn piecewise_interpolates_and_clamps() {
        let s = spec(CostShape::PiecewiseLinear {
            knots: vec![(0.0, 2.0), (1.0, 0.0), (3.0, 1.0)],
        });
        s.validate().unwrap();
        assert_eq!(eval_cost(&s, -5.0).unwrap(), 2.0);
        assert_eq!(eval_cost(&s, 0.5).unwrap(), 1.0);
        assert_eq!(eval_cost(&s, 1.0).unwrap(), 0.0);
        assert_eq!(eval_cost(&s, 2.0).unwrap(), 0.5);
        assert_eq!(eval_cost(&s, 9.0).unwrap(), 1.0);
        let unsorted = spec(CostShape::PiecewiseLinear {
            knots: vec![(1.0, 0.0), (0.0, 1.0)],
        });
        assert!(unsorted.validate().is_err());
    }

    #[test]
    fn rbf_examples() {
        assert_eq!(rbf_score(&rbf(1.5, 0.3), 0.3), 1.0);
        assert!((rbf_score(&rbf(1.0, 0.0), 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((rbf_score(&rbf(1.0, 0.0), 1.0) - 0.367879).abs() < 1e-6);
        for c in [1e3, -1e3, 1e300, f64::INFINITY] {
            let s = rbf_score(&rbf(1.0, 0.0), c);
            assert!(s > 0.0 && s < 1e-300);
        }
    }

    #[test]
    fn map_stroke_examples() {
        let cfg = PerformanceConfig::default();
        cfg.validate().unwrap();
        let p = map_stroke(&optimal_params(), "a", 0, &cfg).unwrap();
        assert_eq!(p.scores, [1.0; 5]);
        assert_eq!(p.scores, IdealPoint::default().coordinates);

        // net clearance one 1/alpha cost unit from the target
        let mut params = optimal_params();
        params.net_clearance_cm = 5.0 + 1.0 / (1.5 * 0.2);
        let p = map_stroke(&params, "a", 0, &cfg).unwrap();
        assert!((p.scores[2] - (-1.0f64).exp()).abs() < 1e-12);
        for i in [0, 1, 3, 4] {
            assert_eq!(p.scores[i], 1.0);
        }

        params.ball_speed_mps = f64::INFINITY;
        let msg = map_stroke(&params, "a", 4, &cfg).unwrap_err().to_string();
        assert!(msg.contains("p4"), "{msg}");
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = PerformanceConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains(r#""kind":"linear_decreasing""#));
        let back: PerformanceConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        let mut swapped = cfg.clone();
        swapped.rbf.swap(0, 1);
        assert!(swapped.validate().is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let pt = PerformancePoint {
            person_id: "x".into(),
            stroke_index: 2,
            scores: [1.0, 0.5, 0.25, 0.125, 1.0],
        };
        write_performance_points(&[pt], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "person_id,stroke_index,s1,s2,s3,s4,s5\nx,2,1,0.5,0.25,0.125,1\n");
    }

    proptest! {
        #[test]
        fn rbf_symmetric(alpha in 0.1..5.0f64, mu in -3.0..3.0f64, t in 0.0..3.0f64) {
            let s = rbf(alpha, mu);
            let (a, b) = (rbf_score(&s, mu + t), rbf_score(&s, mu - t));
            prop_assert!((a - b).abs() <= 1e-9 * a.max(b));
        }

        #[test]
        fn rbf_strictly_decreasing(alpha in 0.1..3.0f64, a in 0.0..5.0f64, b in 0.0..5.0f64) {
            prop_assume!((a - b).abs() > 1e-6);
            let s = rbf(alpha, 0.0);
            let (near, far) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(rbf_score(&s, near) > rbf_score(&s, far));
        }

        #[test]
        fn scores_in_unit_interval(bx in -500.0..500.0f64, by in -500.0..500.0f64, nc in -100.0..100.0f64,
                                   v in -50.0..100.0f64, hr in -3.0..3.0f64) {
            let params = StrokeParameters { bounce_x_cm: bx, bounce_y_cm: by, net_clearance_cm: nc, ball_speed_mps: v, height_ratio: hr };
            let p = map_stroke(&params, "a", 0, &PerformanceConfig::default()).unwrap();
            prop_assert!(p.scores.iter().all(|&s| s > 0.0 && s <= 1.0));
        }

        #[test]
        fn improving_one_parameter_is_monotone(which in 0usize..5, base in proptest::array::uniform5(0.0..1.0f64),
                                               frac in 0.0..1.0f64) {
            // raw values chosen in each default cost's active range
            let ranges = [(0.0, 76.25), (0.0, 137.5), (5.0, 40.0), (0.0, 25.0), (0.0, 1.0)];
            let raw: Vec<f64> = base.iter().zip(ranges).map(|(u, (lo, hi))| lo + u * (hi - lo)).collect();
            let mut better = raw.clone();
            // move toward the zero-cost end of the chosen parameter
            let target = match which { 0 | 1 | 3 => ranges[which].1, 2 => 5.0, _ => 0.0 };
            better[which] = raw[which] + frac * (target - raw[which]);
            let to_params = |r: &[f64]| StrokeParameters { bounce_x_cm: r[0], bounce_y_cm: r[1], net_clearance_cm: r[2], ball_speed_mps: r[3], height_ratio: r[4] };
            let cfg = PerformanceConfig::default();
            let a = map_stroke(&to_params(&raw), "a", 0, &cfg).unwrap();
            let b = map_stroke(&to_params(&better), "a", 0, &cfg).unwrap();
            for i in 0..5 {
                if i == which {
                    prop_assert!(b.scores[i] >= a.scores[i]);
                } else {
                    prop_assert_eq!(b.scores[i], a.scores[i]);
                }
            }
        }
    }
}
