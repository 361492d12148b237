//! Cluster-count selection, k-means partitioning and benchmark selection
//! in the performance space.

mod benchmark;
mod kmeans;
mod linalg;
mod spectral;

pub use benchmark::{
    distance_to_ideal, select_benchmark, select_from_centroids, subcluster, BenchmarkSelection,
    SubclusterResult, MIN_SUBCLUSTER_SIZE,
};
pub use kmeans::{
    kmeans, kmeans_traced, lloyd, restart_rng, ClusterModel, KmeansConfig, RestartTrace,
    DEFAULT_MAX_ITER, DEFAULT_RESTARTS,
};
pub use linalg::{check_symmetric, symmetric_eigen, symmetric_eigenvalues, EigenDecomposition, SYMMETRY_TOLERANCE};
pub use spectral::{
    affinity, eigengaps, normalized_laplacian, sigma_sweep, AffinityMatrix, EigengapProfile,
    SigmaEntry, SigmaGrid, SigmaStatus, SigmaSweepResult, SweepConfig,
};

use nalgebra::DMatrix;

/// Stacks fixed-length rows into an n × D matrix.
pub fn points_matrix<const D: usize>(rows: &[[f64; D]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), D, |i, j| rows[i][j])
}
