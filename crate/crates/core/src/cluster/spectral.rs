//! Gaussian affinity, normalised Laplacian and the sigma sweep that picks
//! the cluster count.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::symmetric_eigenvalues;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub matrix: DMatrix<f64>,
    pub sigma: f64,
}

/// Log-spaced bandwidth grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigmaGrid {
    pub log10_min: f64,
    pub log10_max: f64,
    pub count: usize,
}

impl Default for SigmaGrid {
    fn default() -> Self {
        SigmaGrid {
            log10_min: -3.0,
            log10_max: 1.0,
            count: 100,
        }
    }
}

impl SigmaGrid {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 || !(self.log10_min < self.log10_max) || !self.log10_max.is_finite() || !self.log10_min.is_finite() {
            return Err(Error::InvalidInput(format!("invalid sigma grid {self:?}")));
        }
        Ok(())
    }

    /// Spacing in log10 units.
    pub fn step(&self) -> f64 {
        (self.log10_max - self.log10_min) / (self.count - 1) as f64
    }

    pub fn sigmas(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| 10f64.powf(self.log10_min + i as f64 * self.step()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub grid: SigmaGrid,
    pub k_max: usize,
    /// σ below this multiple of the median nearest-neighbour distance
    /// does not vote.
    pub resolution_factor: f64,
    /// The winning gap must be at least this many times the runner-up.
    pub dominance_ratio: f64,
    /// The winning gap must be at least this large.
    pub min_gap: f64,
    /// Fall back to k = 2 when the best candidate wins on less than this
    /// fraction of the grid.
    pub min_grid_fraction: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid: SigmaGrid::default(),
            k_max: 10,
            resolution_factor: 0.5,
            dominance_ratio: 2.0,
            min_gap: 0.1,
            min_grid_fraction: 0.1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.k_max < 3 {
            return Err(Error::InvalidInput(format!("k_max must be at least 3, got {}", self.k_max)));
        }
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.resolution_factor) || !ok(self.min_gap) || !ok(self.min_grid_fraction) || !(self.dominance_ratio >= 1.0) {
            return Err(Error::InvalidInput(format!("invalid sweep thresholds {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SigmaStatus {
    /// Spectrum computed and σ took part in the vote.
    Voting,
    /// Spectrum computed, σ below the point-cloud resolution.
    BelowResolution,
    /// Some point had no neighbours at this σ.
    Degenerate { row: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaEntry {
    pub sigma: f64,
    pub status: SigmaStatus,
    /// Ascending Laplacian spectrum; empty when degenerate.
    pub eigenvalues: Vec<f64>,
    /// `gaps[i]` is gap index `i + 1`.
    pub gaps: Vec<f64>,
    /// Gap index that dominated at this σ, if any.
    pub winner: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigengapProfile {
    pub sigma_grid: Vec<f64>,
    pub entries: Vec<SigmaEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweepResult {
    pub selected_k: usize,
    /// True when no candidate dominated widely enough and k = 2 was used.
    pub fallback: bool,
    /// Grid points won by each candidate gap index.
    pub winning_counts: BTreeMap<usize, usize>,
    /// Log10-σ length won by each candidate gap index.
    pub dominance_measure: BTreeMap<usize, f64>,
    /// Total grid size, for turning counts into fractions.
    pub grid_count: usize,
    /// σ values that were skipped, with the reason.
    pub skipped: Vec<(f64, SigmaStatus)>,
}

impl SigmaSweepResult {
    pub fn dominance_fraction(&self, k: usize) -> f64 {
        self.winning_counts.get(&k).copied().unwrap_or(0) as f64 / self.grid_count as f64
    }
}

fn squared_distances(points: &DMatrix<f64>) -> DMatrix<f64> {
    let n = points.nrows();
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = (points.row(i) - points.row(j)).norm_squared();
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    d2
}

fn check_points(points: &DMatrix<f64>) -> Result<()> {
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("point coordinate".into()));
    }
    if points.nrows() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 points, got {}", points.nrows())));
    }
    Ok(())
}

fn affinity_from_d2(d2: &DMatrix<f64>, sigma: f64) -> AffinityMatrix {
    let scale = 1.0 / (2.0 * sigma * sigma);
    let n = d2.nrows();
    let matrix = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (-d2[(i, j)] * scale).exp() });
    AffinityMatrix { matrix, sigma }
}

/// `A_ij = exp(−‖x_i − x_j‖² / 2σ²)` off the diagonal, zero on it.
pub fn affinity(points: &DMatrix<f64>, sigma: f64) -> Result<AffinityMatrix> {
    check_points(points)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    Ok(affinity_from_d2(&squared_distances(points), sigma))
}

/// `L = I − D^{−1/2} A D^{−1/2}` with `D` the row sums of `A`.
pub fn normalized_laplacian(a: &AffinityMatrix) -> Result<DMatrix<f64>> {
    let n = a.matrix.nrows();
    let mut inv_sqrt = Vec::with_capacity(n);
    for (row, r) in a.matrix.row_iter().enumerate() {
        let d = r.sum();
        if !(d > 0.0) {
            return Err(Error::DegenerateGraph { row });
        }
        inv_sqrt.push(1.0 / d.sqrt());
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let off = a.matrix[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        if i == j {
            1.0 - off
        } else {
            -off
        }
    }))
}

/// `gap_k = λ_{k+1} − λ_k`, k = 1..n−1, returned zero-indexed.
pub fn eigengaps(eigs: &[f64]) -> Result<Vec<f64>> {
    if eigs.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 eigenvalues, got {}", eigs.len())));
    }
    Ok(eigs.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Gap index in 3..=k_max that clearly dominates this spectrum, if any.
fn dominant_gap(gaps: &[f64], cfg: &SweepConfig) -> Option<usize> {
    let hi = cfg.k_max.min(gaps.len());
    if hi < 3 {
        return None;
    }
    let cand = &gaps[2..hi];
    let mut best = 0;
    for (i, &g) in cand.iter().enumerate() {
        if g > cand[best] {
            best = i;
        }
    }
    let runner_up = cand
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &g)| g)
        .fold(0.0f64, f64::max);
    let top = cand[best];
    if top > runner_up && top >= cfg.dominance_ratio * runner_up && top >= cfg.min_gap {
        Some(best + 3)
    } else {
        None
    }
}

fn median_nn_distance(d2: &DMatrix<f64>) -> f64 {
    let n = d2.nrows();
    let mut nn: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| d2[(i, j)])
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    if n % 2 == 1 {
        nn[n / 2]
    } else {
        0.5 * (nn[n / 2 - 1] + nn[n / 2])
    }
}

/// Scans σ over the grid and picks the gap index that dominates the widest
/// log-σ range.
pub fn sigma_sweep(points: &DMatrix<f64>, cfg: &SweepConfig) -> Result<(EigengapProfile, SigmaSweepResult)> {
    cfg.validate()?;
    check_points(points)?;
    let n = points.nrows();
    if n < cfg.k_max + 1 {
        return Err(Error::InvalidInput(format!(
            "sigma sweep with k_max = {} needs at least {} points, got {n}",
            cfg.k_max,
            cfg.k_max + 1
        )));
    }
    let d2 = squared_distances(points);
    let floor = cfg.resolution_factor * median_nn_distance(&d2);
    let sigmas = cfg.grid.sigmas();

    let entries: Vec<SigmaEntry> = sigmas
        .par_iter()
        .map(|&sigma| -> Result<SigmaEntry> {
            let a = affinity_from_d2(&d2, sigma);
            match normalized_laplacian(&a) {
                Err(Error::DegenerateGraph { row }) => Ok(SigmaEntry {
                    sigma,
                    status: SigmaStatus::Degenerate { row },
                    eigenvalues: Vec::new(),
                    gaps: Vec::new(),
                    winner: None,
                }),
                Err(e) => Err(e),
                Ok(l) => {
                    let eigenvalues = symmetric_eigenvalues(&l)?;
                    let gaps = eigengaps(&eigenvalues)?;
                    let (status, winner) = if sigma < floor {
                        (SigmaStatus::BelowResolution, None)
                    } else {
                        (SigmaStatus::Voting, dominant_gap(&gaps, cfg))
                    };
                    Ok(SigmaEntry {
                        sigma,
                        status,
                        eigenvalues,
                        gaps,
                        winner,
                    })
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut winning_counts = BTreeMap::new();
    let mut skipped = Vec::new();
    for e in &entries {
        if e.status != SigmaStatus::Voting {
            skipped.push((e.sigma, e.status));
        }
        if let Some(k) = e.winner {
            *winning_counts.entry(k).or_insert(0usize) += 1;
        }
    }
    if !skipped.is_empty() {
        log::debug!("sigma sweep skipped {} of {} grid points", skipped.len(), entries.len());
    }
    let step = cfg.grid.step();
    let dominance_measure = winning_counts.iter().map(|(&k, &c)| (k, c as f64 * step)).collect();

    // most wins, ties to the smaller k
    let best = winning_counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&k, &c)| (k, c));
    let (selected_k, fallback) = match best {
        Some((k, c)) if c as f64 >= cfg.min_grid_fraction * cfg.grid.count as f64 => (k, false),
        _ => (2, true),
    };

    Ok((
        EigengapProfile {
            sigma_grid: sigmas,
            entries,
        },
        SigmaSweepResult {
            selected_k,
            fallback,
            winning_counts,
            dominance_measure,
            grid_count: cfg.grid.count,
            skipped,
        },
    ))
}
