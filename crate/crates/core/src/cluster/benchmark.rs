use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, ClusterModel, KmeansConfig};
use super::spectral::{sigma_sweep, EigengapProfile, SigmaSweepResult, SweepConfig};
use crate::error::{Error, Result};

pub const MIN_SUBCLUSTER_SIZE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSelection {
    pub distances: Vec<f64>,
    pub benchmark_index: usize,
}

/// Euclidean distance to the all-ones ideal point.
pub fn distance_to_ideal(centroid: &[f64]) -> f64 {
    centroid.iter().map(|c| (c - 1.0) * (c - 1.0)).sum::<f64>().sqrt()
}

/// Cluster nearest the ideal point; ties go to the lowest index.
pub fn select_from_centroids(centroids: &DMatrix<f64>) -> BenchmarkSelection {
    let distances: Vec<f64> = centroids
        .row_iter()
        .map(|r| distance_to_ideal(&r.iter().copied().collect::<Vec<_>>()))
        .collect();
    let mut benchmark_index = 0;
    for (q, &d) in distances.iter().enumerate() {
        if d < distances[benchmark_index] {
            benchmark_index = q;
        }
    }
    BenchmarkSelection {
        distances,
        benchmark_index,
    }
}

pub fn select_benchmark(model: &ClusterModel) -> BenchmarkSelection {
    select_from_centroids(&model.centroids)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubclusterResult {
    pub profile: EigengapProfile,
    pub sweep: SigmaSweepResult,
    pub model: ClusterModel,
}

/// Sweep and k-means restricted to a subset of points. `k_max` is capped
/// at one less than the subset size.
pub fn subcluster(
    points: &DMatrix<f64>,
    sweep: &SweepConfig,
    kmeans_cfg: &KmeansConfig,
    seed: u64,
) -> Result<SubclusterResult> {
    let n = points.nrows();
    if n < MIN_SUBCLUSTER_SIZE {
        return Err(Error::InvalidInput(format!(
            "sub-clustering needs at least {MIN_SUBCLUSTER_SIZE} points, got {n}"
        )));
    }
    let cfg = SweepConfig {
        k_max: sweep.k_max.min(n - 1).max(3),
        ..*sweep
    };
    let (profile, result) = sigma_sweep(points, &cfg)?;
    let model = kmeans(points, result.selected_k.min(n), seed, kmeans_cfg.restarts)?;
    Ok(SubclusterResult {
        profile,
        sweep: result,
        model,
    })
}
