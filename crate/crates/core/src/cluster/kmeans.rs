//! Lloyd's k-means with k-means++ seeding and seeded restarts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 50;
pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub assignments: Vec<usize>,
    /// k × d, row q is the mean of cluster q.
    pub centroids: DMatrix<f64>,
    pub inertia: f64,
    pub seed: u64,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn members(&self, q: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == q).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        KmeansConfig {
            restarts: DEFAULT_RESTARTS,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Inertia after seeding (`[0]`) and after each centroid update.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, q: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(centroids.row(q).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn nearest(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>) -> (usize, f64) {
    let mut best = (0, sq_dist(points, i, centroids, 0));
    for q in 1..centroids.nrows() {
        let d = sq_dist(points, i, centroids, q);
        if d < best.1 {
            best = (q, d);
        }
    }
    best
}

fn sse(points: &DMatrix<f64>, assignments: &[usize], centroids: &DMatrix<f64>) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &q)| sq_dist(points, i, centroids, q))
        .sum()
}

fn means(points: &DMatrix<f64>, assignments: &[usize], k: usize, previous: &DMatrix<f64>) -> DMatrix<f64> {
    let d = points.ncols();
    let mut sums = DMatrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &q) in assignments.iter().enumerate() {
        counts[q] += 1;
        for c in 0..d {
            sums[(q, c)] += points[(i, c)];
        }
    }
    for q in 0..k {
        if counts[q] == 0 {
            sums.row_mut(q).copy_from(&previous.row(q));
        } else {
            sums.row_mut(q).scale_mut(1.0 / counts[q] as f64);
        }
    }
    sums
}

fn kmeans_pp(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = points.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| (points.row(i) - points.row(chosen[0])).norm_squared())
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min((points.row(i) - points.row(next)).norm_squared());
        }
    }
    DMatrix::from_fn(k, points.ncols(), |q, c| points[(chosen[q], c)])
}

/// Moves each empty cluster's centroid onto the point farthest from its
/// own centroid, taking that point out of a cluster with other members.
fn repair_empty(points: &DMatrix<f64>, assignments: &mut [usize], centroids: &mut DMatrix<f64>) -> bool {
    let k = centroids.nrows();
    let mut repaired = false;
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return repaired;
        };
        let far = (0..points.nrows())
            .filter(|&i| sizes[assignments[i]] > 1)
            .map(|i| (i, sq_dist(points, i, centroids, assignments[i])))
            .fold(None::<(usize, f64)>, |best, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            });
        let Some((i, _)) = far else {
            return repaired;
        };
        assignments[i] = empty;
        centroids.row_mut(empty).copy_from(&points.row(i));
        repaired = true;
    }
}

/// One Lloyd run from the given seed centroids.
pub fn lloyd(
    points: &DMatrix<f64>,
    seeds: DMatrix<f64>,
    max_iter: usize,
) -> (Vec<usize>, DMatrix<f64>, RestartTrace) {
    let n = points.nrows();
    let mut centroids = seeds;
    let mut assignments: Vec<usize> = (0..n).map(|i| nearest(points, i, &centroids).0).collect();
    repair_empty(points, &mut assignments, &mut centroids);
    let mut history = vec![sse(points, &assignments, &centroids)];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        centroids = means(points, &assignments, centroids.nrows(), &centroids);
        history.push(sse(points, &assignments, &centroids));
        let mut changed = false;
        for (i, a) in assignments.iter_mut().enumerate() {
            let (q, d) = nearest(points, i, &centroids);
            if q != *a && d < sq_dist(points, i, &centroids, *a) {
                *a = q;
                changed = true;
            }
        }
        changed |= repair_empty(points, &mut assignments, &mut centroids);
        if !changed {
            break;
        }
    }
    let final_centroids = means(points, &assignments, centroids.nrows(), &centroids);
    (
        assignments,
        final_centroids,
        RestartTrace {
            inertia_history: history,
            iterations,
        },
    )
}

fn check_inputs(points: &DMatrix<f64>, k: usize, restarts: usize) -> Result<()> {
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("point coordinate".into()));
    }
    if k == 0 || restarts == 0 {
        return Err(Error::InvalidInput(format!("k and restarts must be positive (k = {k}, restarts = {restarts})")));
    }
    if points.nrows() < k {
        return Err(Error::InvalidInput(format!("k = {k} exceeds the {} available points", points.nrows())));
    }
    Ok(())
}

/// Restart `r` draws from stream `r` of a ChaCha8 generator seeded with `seed`.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Best of `cfg.restarts` runs plus the inertia trace of every run.
pub fn kmeans_traced(
    points: &DMatrix<f64>,
    k: usize,
    seed: u64,
    cfg: &KmeansConfig,
) -> Result<(ClusterModel, Vec<RestartTrace>)> {
    check_inputs(points, k, cfg.restarts)?;
    let runs: Vec<_> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(seed, r);
            let seeds = kmeans_pp(points, k, &mut rng);
            let (assignments, centroids, trace) = lloyd(points, seeds, cfg.max_iter);
            let inertia = sse(points, &assignments, &centroids);
            (assignments, centroids, inertia, trace)
        })
        .collect();

    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.2 < runs[best].2 {
            best = r;
        }
    }
    let mut traces = Vec::with_capacity(runs.len());
    let mut winner = None;
    for (r, (assignments, centroids, inertia, trace)) in runs.into_iter().enumerate() {
        if r == best {
            winner = Some(ClusterModel {
                k,
                assignments,
                centroids,
                inertia,
                seed,
            });
        }
        traces.push(trace);
    }
    Ok((winner.expect("at least one restart"), traces))
}

pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<ClusterModel> {
    let cfg = KmeansConfig {
        restarts,
        max_iter: DEFAULT_MAX_ITER,
    };
    kmeans_traced(points, k, seed, &cfg).map(|(m, _)| m)
}
