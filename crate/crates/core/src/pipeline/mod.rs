//! End-to-end run from a session manifest to the report bundle.

mod plots;
mod tables;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attitude::{estimate_orientation, EkfConfig, OrientationTrack};
use crate::cluster::{
    kmeans_traced, select_benchmark, sigma_sweep, subcluster, BenchmarkSelection, ClusterModel,
    EigengapProfile, KmeansConfig, SigmaSweepResult, SubclusterResult, SweepConfig,
};
use crate::embedding::{tsne_embed, Embedding2D, TsneConfig};
use crate::error::{Error, Result, Stage};
use crate::geometry::{extract_parameters, load_measurements, StrokeMeasurement, TableDims, DEFAULT_FPS};
use crate::ingest::{
    align_streams, load_annotation, load_manifest, parse_sensor_file, split_realizations,
    validate_realization, ImuRealization, SensorId, UnitScale, ValidationLimits, DEFAULT_SAMPLE_RATE_HZ,
};
use crate::kinematics::{
    joint_angles, mean_euler_signal, resample_track, JointAngleTrack, MeanEulerSignal, DEFAULT_CYCLE_LENGTH,
};
use crate::performance::{map_stroke, PerformanceConfig, PerformancePoint};

pub use plots::{composition_svg, eigengap_svg, mean_signal_svg, scatter_svg, Palette};
pub use tables::{
    read_performance_points, write_assignments, write_centroid_table, write_composition, write_eigengaps,
    write_embedding,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub unit_scale: UnitScale,
    pub validation: ValidationLimits,
    /// Skip realizations that fail validation instead of aborting.
    pub drop_invalid: bool,
    pub ekf: EkfConfig,
    pub cycle_length: usize,
    pub table: TableDims,
    pub fps: f64,
    pub performance: PerformanceConfig,
    pub sweep: SweepConfig,
    pub kmeans: KmeansConfig,
    pub tsne: TsneConfig,
    pub embedding: bool,
    /// Clusters to split further.
    pub subcluster: Vec<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            manifest: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            unit_scale: UnitScale::default(),
            validation: ValidationLimits::default(),
            drop_invalid: false,
            ekf: EkfConfig::default(),
            cycle_length: DEFAULT_CYCLE_LENGTH,
            table: TableDims::default(),
            fps: DEFAULT_FPS,
            performance: PerformanceConfig::default(),
            sweep: SweepConfig::default(),
            kmeans: KmeansConfig::default(),
            tsne: TsneConfig::default(),
            embedding: true,
            subcluster: Vec::new(),
        }
    }
}

impl PipelineConfig {
    /// Reads a JSON config; relative paths are taken from the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = crate::ingest::read_json(path).map_err(|e| e.in_stage(Stage::Config, path.display().to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(m) = &cfg.manifest {
            if m.is_relative() {
                cfg.manifest = Some(base.join(m));
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let check = || -> Result<()> {
            if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) || !(self.fps > 0.0 && self.fps.is_finite()) {
                return Err(Error::InvalidInput("sample_rate_hz and fps must be positive".into()));
            }
            if self.cycle_length < 2 {
                return Err(Error::InvalidInput("cycle_length must be at least 2".into()));
            }
            if self.kmeans.restarts == 0 || self.kmeans.max_iter == 0 {
                return Err(Error::InvalidInput("kmeans restarts and max_iter must be positive".into()));
            }
            self.ekf.validate()?;
            self.table.validate()?;
            self.performance.validate()?;
            self.sweep.validate()?;
            self.tsne.validate()
        };
        check().map_err(|e| e.in_stage(Stage::Config, "pipeline config"))
    }

    fn manifest_path(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("no manifest given".into()).in_stage(Stage::Config, "pipeline config"))
    }
}

/// Independent seeds for each random consumer, all drawn from the config seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

const KMEANS_STREAM: u64 = 1;
const TSNE_STREAM: u64 = 2;
const SUBCLUSTER_STREAM: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub realizations: Vec<ImuRealization>,
    pub measurements: Vec<StrokeMeasurement>,
    /// Participants in manifest order.
    pub people: Vec<String>,
    /// (person, stroke, reason) for every dropped realization.
    pub dropped: Vec<(String, usize, String)>,
}

pub fn load_session(cfg: &PipelineConfig) -> Result<Session> {
    let manifest_path = cfg.manifest_path()?;
    let manifest = load_manifest(manifest_path).map_err(|e| e.in_stage(Stage::Ingest, manifest_path.display().to_string()))?;
    let mut session = Session {
        realizations: Vec::new(),
        measurements: Vec::new(),
        people: Vec::new(),
        dropped: Vec::new(),
    };
    for part in &manifest.participants {
        let person = part.person_id.as_str();
        let ctx = |what: &str| format!("person {person}, {what}");
        let streams = SensorId::ALL.map(|s| {
            parse_sensor_file(part.sensors.get(s), s, &cfg.unit_scale, cfg.sample_rate_hz)
                .map_err(|e| e.in_stage(Stage::Ingest, ctx(s.name())))
        });
        let [a, b, c, d] = streams;
        let aligned = align_streams([a?, b?, c?, d?]).map_err(|e| e.in_stage(Stage::Ingest, ctx("alignment")))?;
        let ann = load_annotation(&part.annotation).map_err(|e| e.in_stage(Stage::Ingest, ctx("annotation")))?;
        if ann.person_id != part.person_id {
            return Err(Error::Annotation(format!(
                "annotation belongs to {} but is listed for {person}",
                ann.person_id
            ))
            .in_stage(Stage::Ingest, ctx("annotation")));
        }
        let realizations = split_realizations(&aligned, &ann).map_err(|e| e.in_stage(Stage::Ingest, ctx("split")))?;
        if realizations.len() != manifest.expected_realizations {
            log::warn!(
                "{person}: {} realizations, manifest expects {}",
                realizations.len(),
                manifest.expected_realizations
            );
        }
        for r in realizations {
            let violations = validate_realization(&r, &cfg.validation);
            if violations.is_empty() {
                session.realizations.push(r);
                continue;
            }
            let reason = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            if !cfg.drop_invalid {
                return Err(Error::InvalidInput(reason).in_stage(Stage::Ingest, ctx(&format!("stroke {}", r.stroke_index))));
            }
            log::warn!("{person} stroke {}: dropped ({reason})", r.stroke_index);
            session.dropped.push((part.person_id.clone(), r.stroke_index, reason));
        }
        let records = load_measurements(&part.measurements).map_err(|e| e.in_stage(Stage::Ingest, ctx("measurements")))?;
        if let Some(bad) = records.iter().find(|m| m.person_id != part.person_id) {
            return Err(Error::Schema(format!("measurement record for {} in {person}'s file", bad.person_id))
                .in_stage(Stage::Ingest, ctx("measurements")));
        }
        session.measurements.extend(records);
        session.people.push(part.person_id.clone());
    }
    if session.realizations.is_empty() {
        return Err(Error::InvalidInput("no realizations left".into()).in_stage(Stage::Ingest, "session"));
    }
    Ok(session)
}

/// Per realization: four EKF tracks, then joint angles.
pub fn compute_joint_angles(realizations: &[ImuRealization], ekf: &EkfConfig) -> Result<Vec<JointAngleTrack>> {
    realizations
        .par_iter()
        .map(|r| {
            let ctx = |sensor: Option<SensorId>| match sensor {
                Some(s) => format!("person {}, stroke {}, {s}", r.person_id, r.stroke_index),
                None => format!("person {}, stroke {}", r.person_id, r.stroke_index),
            };
            let tracks: Vec<OrientationTrack> = r
                .streams
                .iter()
                .map(|s| estimate_orientation(s, ekf).map_err(|e| e.in_stage(Stage::Attitude, ctx(Some(s.sensor)))))
                .collect::<Result<_>>()?;
            let tracks: [OrientationTrack; 4] = tracks.try_into().expect("four sensor tracks");
            joint_angles(&tracks, &r.person_id, r.stroke_index).map_err(|e| e.in_stage(Stage::Kinematics, ctx(None)))
        })
        .collect()
}

pub fn resample_all(tracks: &[JointAngleTrack], k: usize) -> Result<Vec<JointAngleTrack>> {
    tracks
        .iter()
        .map(|t| {
            resample_track(t, k)
                .map_err(|e| e.in_stage(Stage::Kinematics, format!("person {}, stroke {}", t.person_id, t.stroke_index)))
        })
        .collect()
}

/// Performance points for the given strokes, in the given order.
pub fn map_performance(
    keys: &[(String, usize)],
    measurements: &[StrokeMeasurement],
    cfg: &PipelineConfig,
) -> Result<Vec<PerformancePoint>> {
    let by_key: BTreeMap<(&str, usize), &StrokeMeasurement> =
        measurements.iter().map(|m| ((m.person_id.as_str(), m.stroke_index), m)).collect();
    keys.iter()
        .map(|(person, stroke)| {
            let ctx = || format!("person {person}, stroke {stroke}");
            let m = by_key
                .get(&(person.as_str(), *stroke))
                .ok_or_else(|| Error::Schema("no measurement record".into()).in_stage(Stage::Geometry, ctx()))?;
            let params = extract_parameters(m, &cfg.table, cfg.fps).map_err(|e| e.in_stage(Stage::Geometry, ctx()))?;
            map_stroke(&params, person, *stroke, &cfg.performance).map_err(|e| e.in_stage(Stage::Performance, ctx()))
        })
        .collect()
}

pub fn points_of(points: &[PerformancePoint]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), 5, |i, j| points[i].scores[j])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome {
    pub profile: EigengapProfile,
    pub sweep: SigmaSweepResult,
    pub model: ClusterModel,
    pub benchmark: BenchmarkSelection,
}

pub fn sweep_points(points: &[PerformancePoint], cfg: &PipelineConfig) -> Result<(EigengapProfile, SigmaSweepResult)> {
    sigma_sweep(&points_of(points), &cfg.sweep).map_err(|e| e.in_stage(Stage::Sweep, format!("{} points", points.len())))
}

pub fn cluster_points(points: &[PerformancePoint], cfg: &PipelineConfig) -> Result<ClusterOutcome> {
    let (profile, sweep) = sweep_points(points, cfg)?;
    let (model, _) = kmeans_traced(&points_of(points), sweep.selected_k, derive_seed(cfg.seed, KMEANS_STREAM), &cfg.kmeans)
        .map_err(|e| e.in_stage(Stage::Kmeans, format!("k = {}", sweep.selected_k)))?;
    let benchmark = select_benchmark(&model);
    Ok(ClusterOutcome {
        profile,
        sweep,
        model,
        benchmark,
    })
}

/// Stroke counts per person and cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub people: Vec<String>,
    /// `counts[person][cluster]`
    pub counts: Vec<Vec<usize>>,
}

impl Composition {
    pub fn from_assignments(people: &[String], points: &[PerformancePoint], assignments: &[usize], k: usize) -> Self {
        let mut counts = vec![vec![0; k]; people.len()];
        for (p, &a) in points.iter().zip(assignments) {
            if let Some(row) = people.iter().position(|x| *x == p.person_id) {
                counts[row][a] += 1;
            }
        }
        Composition {
            people: people.to_vec(),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubclusterReport {
    pub parent: usize,
    /// Indices into the report's point list.
    pub members: Vec<usize>,
    pub result: SubclusterResult,
    pub mean_signals: Vec<MeanEulerSignal>,
    pub k_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub points: Vec<PerformancePoint>,
    /// Resampled joint-angle tracks, aligned with `points`.
    pub tracks: Vec<JointAngleTrack>,
    pub clusters: ClusterOutcome,
    pub composition: Composition,
    pub mean_signals: Vec<MeanEulerSignal>,
    pub subclusters: Vec<SubclusterReport>,
    pub embedding: Option<Embedding2D>,
    pub dropped: Vec<(String, usize, String)>,
    /// Largest gap index shown in eigengap tables and plots.
    pub k_max: usize,
}

impl BenchmarkReport {
    pub fn selected_k(&self) -> usize {
        self.clusters.sweep.selected_k
    }
}

fn mean_signals_for(tracks: &[JointAngleTrack], assignments: &[usize], k: usize) -> Result<Vec<MeanEulerSignal>> {
    (0..k)
        .filter_map(|q| {
            let members: Vec<&JointAngleTrack> =
                tracks.iter().zip(assignments).filter(|(_, &a)| a == q).map(|(t, _)| t).collect();
            if members.is_empty() {
                None
            } else {
                Some(mean_euler_signal(q, &members).map_err(|e| e.in_stage(Stage::Kinematics, format!("cluster {q}"))))
            }
        })
        .collect()
}

/// Runs every stage and returns the report without writing anything.
pub fn build_report(cfg: &PipelineConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let session = load_session(cfg)?;
    let raw = compute_joint_angles(&session.realizations, &cfg.ekf)?;
    let tracks = resample_all(&raw, cfg.cycle_length)?;
    let keys: Vec<(String, usize)> = session.realizations.iter().map(|r| (r.person_id.clone(), r.stroke_index)).collect();
    let points = map_performance(&keys, &session.measurements, cfg)?;
    let clusters = cluster_points(&points, cfg)?;
    let k = clusters.model.k;
    let composition = Composition::from_assignments(&session.people, &points, &clusters.model.assignments, k);
    let mean_signals = mean_signals_for(&tracks, &clusters.model.assignments, k)?;

    let mut subclusters = Vec::new();
    for &parent in &cfg.subcluster {
        if parent >= k {
            return Err(Error::InvalidInput(format!("cluster {parent} does not exist (k = {k})"))
                .in_stage(Stage::Sweep, "sub-clustering"));
        }
        let members = clusters.model.members(parent);
        let sub_points: Vec<PerformancePoint> = members.iter().map(|&i| points[i].clone()).collect();
        let result = subcluster(
            &points_of(&sub_points),
            &cfg.sweep,
            &cfg.kmeans,
            derive_seed(cfg.seed, SUBCLUSTER_STREAM + parent as u64),
        )
        .map_err(|e| e.in_stage(Stage::Sweep, format!("sub-clustering cluster {parent}")))?;
        let sub_tracks: Vec<JointAngleTrack> = members.iter().map(|&i| tracks[i].clone()).collect();
        let mean_signals = mean_signals_for(&sub_tracks, &result.model.assignments, result.model.k)?;
        let k_max = cfg.sweep.k_max.min(members.len() - 1).max(3);
        subclusters.push(SubclusterReport {
            parent,
            members,
            result,
            mean_signals,
            k_max,
        });
    }

    let embedding = if cfg.embedding {
        let n = points.len();
        let mut tsne = cfg.tsne;
        tsne.seed = derive_seed(cfg.seed, TSNE_STREAM);
        let cap = (n as f64 - 1.0) / 3.0;
        if tsne.perplexity >= n as f64 / 3.0 {
            log::warn!("perplexity {} too large for {n} points, using {cap:.3}", tsne.perplexity);
            tsne.perplexity = cap;
        }
        Some(tsne_embed(&points_of(&points), &tsne).map_err(|e| e.in_stage(Stage::Embedding, format!("{n} points")))?)
    } else {
        None
    };

    Ok(BenchmarkReport {
        points,
        tracks,
        clusters,
        composition,
        mean_signals,
        subclusters,
        embedding,
        dropped: session.dropped,
        k_max: cfg.sweep.k_max,
    })
}

/// Builds the report and writes every table and plot to `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<BenchmarkReport> {
    let report = build_report(cfg)?;
    emit_tables(&report, &cfg.output_dir)?;
    emit_plots(&report, &cfg.output_dir)?;
    Ok(report)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).in_stage(Stage::Output, dir.display().to_string()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e).in_stage(Stage::Output, path.display().to_string()))
}

fn to_csv<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Error::io(path, e).in_stage(Stage::Output, path.display().to_string()))?;
    write_file(path, &buf)
}

/// Summary written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub selected_k: usize,
    pub fallback: bool,
    pub benchmark_index: usize,
    pub distances: Vec<f64>,
    pub centroids: Vec<Vec<f64>>,
    pub cluster_sizes: Vec<usize>,
    pub inertia: f64,
    pub n_points: usize,
    pub dropped: usize,
    pub final_kl: Option<f64>,
}

impl ReportSummary {
    pub fn new(clusters: &ClusterOutcome, n_points: usize, dropped: usize, final_kl: Option<f64>) -> Self {
        let m = &clusters.model;
        ReportSummary {
            selected_k: clusters.sweep.selected_k,
            fallback: clusters.sweep.fallback,
            benchmark_index: clusters.benchmark.benchmark_index,
            distances: clusters.benchmark.distances.clone(),
            centroids: m.centroids.row_iter().map(|row| row.iter().copied().collect()).collect(),
            cluster_sizes: m.cluster_sizes(),
            inertia: m.inertia,
            n_points,
            dropped,
            final_kl,
        }
    }

    pub fn from_report(r: &BenchmarkReport) -> Self {
        Self::new(&r.clusters, r.points.len(), r.dropped.len(), r.embedding.as_ref().map(|e| e.final_kl))
    }
}

fn write_summary(summary: &ReportSummary, dir: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::InvalidInput(e.to_string()).in_stage(Stage::Output, "report.json"))?;
    write_file(&dir.join("report.json"), (text + "\n").as_bytes())
}

/// Reads `report.json` from an output directory.
pub fn read_summary(dir: &Path) -> Result<ReportSummary> {
    let path = dir.join("report.json");
    crate::ingest::read_json(&path).map_err(|e| e.in_stage(Stage::Output, path.display().to_string()))
}

/// Tables and eigengap plot for a clustering of pre-mapped points.
pub fn emit_clustering(points: &[PerformancePoint], clusters: &ClusterOutcome, k_max: usize, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    to_csv(&dir.join("assignments.csv"), |w| write_assignments(points, &clusters.model.assignments, None, w))?;
    to_csv(&dir.join("centroids.csv"), |w| write_centroid_table(&clusters.model.centroids, &clusters.benchmark, w))?;
    to_csv(&dir.join("eigengaps.csv"), |w| write_eigengaps(&clusters.profile, k_max, w))?;
    write_file(&dir.join("eigengaps.svg"), eigengap_svg(&clusters.profile, k_max, "Eigengaps").as_bytes())?;
    write_summary(&ReportSummary::new(clusters, points.len(), 0, None), dir)
}

/// Writes the clustering tables: assignments, centroids, composition,
/// eigengaps, mapped points, mean signals, embedding and `report.json`.
pub fn emit_tables(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let model = &report.clusters.model;
    let sub_labels = subcluster_labels(report);
    to_csv(&dir.join("assignments.csv"), |w| {
        write_assignments(&report.points, &model.assignments, sub_labels.as_deref(), w)
    })?;
    to_csv(&dir.join("centroids.csv"), |w| write_centroid_table(&model.centroids, &report.clusters.benchmark, w))?;
    to_csv(&dir.join("composition.csv"), |w| write_composition(&report.composition, w))?;
    to_csv(&dir.join("eigengaps.csv"), |w| write_eigengaps(&report.clusters.profile, report.k_max, w))?;
    to_csv(&dir.join("performance.csv"), |w| crate::performance::write_performance_points(&report.points, w))?;
    for s in &report.mean_signals {
        to_csv(&dir.join(format!("mean_signal_cluster{}.csv", s.cluster_id)), |w| {
            crate::kinematics::write_mean_signal(s, w)
        })?;
    }
    if let Some(e) = &report.embedding {
        to_csv(&dir.join("embedding.csv"), |w| write_embedding(&report.points, &model.assignments, e, w))?;
    }
    for sub in &report.subclusters {
        let p = sub.parent;
        to_csv(&dir.join(format!("subcluster{p}_eigengaps.csv")), |w| {
            write_eigengaps(&sub.result.profile, sub.k_max, w)
        })?;
        let bench = select_benchmark(&sub.result.model);
        to_csv(&dir.join(format!("subcluster{p}_centroids.csv")), |w| {
            write_centroid_table(&sub.result.model.centroids, &bench, w)
        })?;
        for s in &sub.mean_signals {
            to_csv(&dir.join(format!("subcluster{p}_mean_signal{}.csv", s.cluster_id)), |w| {
                crate::kinematics::write_mean_signal(s, w)
            })?;
        }
    }
    write_summary(&ReportSummary::from_report(report), dir)
}

fn subcluster_labels(report: &BenchmarkReport) -> Option<Vec<Option<usize>>> {
    if report.subclusters.is_empty() {
        return None;
    }
    let mut labels = vec![None; report.points.len()];
    for sub in &report.subclusters {
        for (&i, &a) in sub.members.iter().zip(&sub.result.model.assignments) {
            labels[i] = Some(a);
        }
    }
    Some(labels)
}

/// Writes the SVG figures next to the tables.
pub fn emit_plots(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let model = &report.clusters.model;
    write_file(&dir.join("eigengaps.svg"), eigengap_svg(&report.clusters.profile, report.k_max, "Eigengaps").as_bytes())?;
    write_file(&dir.join("composition.svg"), composition_svg(&report.composition).as_bytes())?;
    for s in &report.mean_signals {
        let title = format!("Mean Euler signal, cluster {} (n = {})", s.cluster_id, s.n_q);
        write_file(&dir.join(format!("mean_signal_cluster{}.svg", s.cluster_id)), mean_signal_svg(s, &title).as_bytes())?;
    }
    if let Some(e) = &report.embedding {
        write_file(&dir.join("embedding.svg"), scatter_svg(&e.coords, &model.assignments, model.k, "t-SNE embedding").as_bytes())?;
    }
    for sub in &report.subclusters {
        let p = sub.parent;
        write_file(
            &dir.join(format!("subcluster{p}_eigengaps.svg")),
            eigengap_svg(&sub.result.profile, sub.k_max, &format!("Eigengaps, cluster {p}")).as_bytes(),
        )?;
        if let Some(e) = &report.embedding {
            let coords: Vec<[f64; 2]> = sub.members.iter().map(|&i| e.coords[i]).collect();
            write_file(
                &dir.join(format!("subcluster{p}_embedding.svg")),
                scatter_svg(&coords, &sub.result.model.assignments, sub.result.model.k, &format!("Cluster {p} sub-clusters"))
                    .as_bytes(),
            )?;
        }
        for s in &sub.mean_signals {
            let title = format!("Mean Euler signal, cluster {p}.{} (n = {})", s.cluster_id, s.n_q);
            write_file(
                &dir.join(format!("subcluster{p}_mean_signal{}.svg", s.cluster_id)),
                mean_signal_svg(s, &title).as_bytes(),
            )?;
        }
    }
    Ok(())
}
