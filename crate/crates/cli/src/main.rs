use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use strokebench_core::kinematics::write_joint_angle_track;
use strokebench_core::pipeline::{
    cluster_points, compute_joint_angles, eigengap_svg, emit_clustering, load_session, read_performance_points, read_summary,
    resample_all, run_pipeline, sweep_points, write_eigengaps, PipelineConfig,
};
use strokebench_core::{Error, Result, Stage};

#[derive(Debug, Parser)]
#[command(name = "strokebench", version, about = "IMU stroke clustering and benchmark selection")]
struct Cli {
    /// Pipeline config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed, overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full pipeline from manifest to report bundle.
    Run(RunArgs),
    /// Stop after joint angles and write one CSV per stroke.
    Euler(EulerArgs),
    /// Cluster pre-mapped performance points.
    Cluster(PointsArgs),
    /// Eigengap scan only.
    Sweep(PointsArgs),
    /// Print the centroid table of a finished run.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Session manifest, overrides the config.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Skip the t-SNE embedding.
    #[arg(long)]
    no_embedding: bool,
    /// Cluster to split further; repeatable.
    #[arg(long)]
    subcluster: Vec<usize>,
}

#[derive(Debug, Args)]
struct EulerArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Resample each stroke to the configured cycle length.
    #[arg(long)]
    resampled: bool,
}

#[derive(Debug, Args)]
struct PointsArgs {
    /// CSV with `person_id,stroke_index,s1,...,s5` rows.
    #[arg(long)]
    points: PathBuf,
    /// Largest gap index considered, overrides the config.
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Output directory of a previous run; defaults to `--out` or the config.
    #[arg(long)]
    dir: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn read_points(path: &Path) -> Result<Vec<strokebench_core::performance::PerformancePoint>> {
    let file = File::open(path).map_err(|e| Error::io(path, e).in_stage(Stage::Ingest, "performance points"))?;
    read_performance_points(file, path).map_err(|e| e.in_stage(Stage::Ingest, "performance points"))
}

fn output_error(path: &Path, e: std::io::Error) -> Error {
    Error::io(path, e).in_stage(Stage::Output, "writing outputs")
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::Run(args) => {
            if let Some(m) = &args.manifest {
                cfg.manifest = Some(m.clone());
            }
            if args.no_embedding {
                cfg.embedding = false;
            }
            cfg.subcluster.extend(&args.subcluster);
            let report = run_pipeline(&cfg)?;
            let b = &report.clusters.benchmark;
            println!(
                "{} strokes, k = {}, benchmark cluster {} (distance {:.4})",
                report.points.len(),
                report.selected_k(),
                b.benchmark_index,
                b.distances[b.benchmark_index]
            );
            println!("outputs in {}", cfg.output_dir.display());
        }
        Command::Euler(args) => {
            if let Some(m) = &args.manifest {
                cfg.manifest = Some(m.clone());
            }
            cfg.validate()?;
            let session = load_session(&cfg)?;
            let mut tracks = compute_joint_angles(&session.realizations, &cfg.ekf)?;
            if args.resampled {
                tracks = resample_all(&tracks, cfg.cycle_length)?;
            }
            let dir = cfg.output_dir.join("euler");
            std::fs::create_dir_all(&dir).map_err(|e| output_error(&dir, e))?;
            for t in &tracks {
                let path = dir.join(format!("{}_stroke{}.csv", t.person_id, t.stroke_index));
                let file = File::create(&path).map_err(|e| output_error(&path, e))?;
                write_joint_angle_track(t, file).map_err(|e| output_error(&path, e))?;
            }
            println!("{} joint-angle tracks in {}", tracks.len(), dir.display());
        }
        Command::Cluster(args) => {
            if let Some(k) = args.k_max {
                cfg.sweep.k_max = k;
            }
            cfg.validate()?;
            let points = read_points(&args.points)?;
            let clusters = cluster_points(&points, &cfg)?;
            emit_clustering(&points, &clusters, cfg.sweep.k_max, &cfg.output_dir)?;
            let b = &clusters.benchmark;
            println!(
                "{} points, k = {}{}, benchmark cluster {} (distance {:.4})",
                points.len(),
                clusters.sweep.selected_k,
                if clusters.sweep.fallback { " (fallback)" } else { "" },
                b.benchmark_index,
                b.distances[b.benchmark_index]
            );
        }
        Command::Sweep(args) => {
            if let Some(k) = args.k_max {
                cfg.sweep.k_max = k;
            }
            cfg.validate()?;
            let points = read_points(&args.points)?;
            let (profile, sweep) = sweep_points(&points, &cfg)?;
            let dir = &cfg.output_dir;
            std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
            let csv_path = dir.join("eigengaps.csv");
            let file = File::create(&csv_path).map_err(|e| output_error(&csv_path, e))?;
            write_eigengaps(&profile, cfg.sweep.k_max, file).map_err(|e| output_error(&csv_path, e))?;
            let svg_path = dir.join("eigengaps.svg");
            std::fs::write(&svg_path, eigengap_svg(&profile, cfg.sweep.k_max, "Eigengaps"))
                .map_err(|e| output_error(&svg_path, e))?;
            println!(
                "selected k = {}{}",
                sweep.selected_k,
                if sweep.fallback { " (fallback)" } else { "" }
            );
            for (k, count) in &sweep.winning_counts {
                println!("  gap {k}: {count} of {} grid points", sweep.grid_count);
            }
            println!("  skipped: {}", sweep.skipped.len());
        }
        Command::Report(args) => {
            let dir = args.dir.clone().unwrap_or(cfg.output_dir);
            let s = read_summary(&dir)?;
            println!("selected k = {}{}", s.selected_k, if s.fallback { " (fallback)" } else { "" });
            println!("cluster      c1      c2      c3      c4      c5  distance  size");
            for (q, c) in s.centroids.iter().enumerate() {
                let cells: Vec<String> = c.iter().map(|v| format!("{v:>7.4}")).collect();
                println!(
                    "{:>7}{} {}  {:>8.4}  {:>4}",
                    q,
                    if q == s.benchmark_index { "*" } else { " " },
                    cells.join(" "),
                    s.distances[q],
                    s.cluster_sizes[q]
                );
            }
            println!("* benchmark cluster");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
