//! Exact t-SNE for two-dimensional views of the performance space.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cluster::symmetric_eigen;
use crate::error::{Error, Result};

pub const PERPLEXITY_TOLERANCE: f64 = 1e-4;
pub const MAX_BISECTION_STEPS: usize = 200;
const INIT_STD: f64 = 1e-4;
const INIT_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub min_gain: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            min_gain: 0.01,
            seed: 0,
        }
    }
}

impl TsneConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.perplexity) || !pos(self.learning_rate) || !pos(self.early_exaggeration) || !pos(self.min_gain) {
            return Err(Error::InvalidInput(format!("t-SNE parameters must be positive: {self:?}")));
        }
        if self.iterations == 0 || self.exaggeration_iters > self.iterations {
            return Err(Error::InvalidInput(format!(
                "t-SNE needs 0 < exaggeration_iters <= iterations, got {} / {}",
                self.exaggeration_iters, self.iterations
            )));
        }
        if !(0.0..1.0).contains(&self.initial_momentum) || !(0.0..1.0).contains(&self.final_momentum) {
            return Err(Error::InvalidInput("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub coords: Vec<[f64; 2]>,
    pub final_kl: f64,
    /// KL(P‖Q) at the end of exaggeration and after every later iteration.
    pub kl_history: Vec<f64>,
}

fn squared_distances(points: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let mut d2 = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = (points.row(i) - points.row(j)).norm_squared();
            d2[i][j] = v;
            d2[j][i] = v;
        }
    }
    d2
}

fn check_input(points: &DMatrix<f64>, perplexity: f64) -> Result<()> {
    let n = points.nrows();
    if n < 4 {
        return Err(Error::InvalidInput(format!("t-SNE needs at least 4 points, got {n}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("point coordinate".into()));
    }
    if !(perplexity > 0.0) || perplexity >= n as f64 / 3.0 {
        return Err(Error::InvalidInput(format!(
            "perplexity {perplexity} must be positive and below n/3 = {:.3}",
            n as f64 / 3.0
        )));
    }
    Ok(())
}

/// Row `i` of the conditional distribution at precision `beta`, and its
/// perplexity.
fn conditional_row(d2: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let dmin = d2
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, o) in out.iter_mut().enumerate() {
        *o = if j == i { 0.0 } else { (-beta * (d2[j] - dmin)).exp() };
        sum += *o;
    }
    let mut h = 0.0;
    for o in out.iter_mut() {
        *o /= sum;
        if *o > 0.0 {
            h -= *o * o.ln();
        }
    }
    h.exp()
}

/// Row-conditional affinities `p_{j|i}` with per-row bandwidth set by
/// bisection on the perplexity.
pub fn conditional_affinities(points: &DMatrix<f64>, perplexity: f64) -> Result<DMatrix<f64>> {
    check_input(points, perplexity)?;
    let n = points.nrows();
    let d2 = squared_distances(points);
    let mut p = DMatrix::zeros(n, n);
    let mut row = vec![0.0; n];
    for i in 0..n {
        let others = || d2[i].iter().enumerate().filter(move |&(j, _)| j != i).map(|(_, &d)| d);
        let dmax = others().fold(0.0, f64::max);
        let dmin = others().fold(f64::INFINITY, f64::min);
        if dmax - dmin <= 1e-12 * dmax.max(f64::MIN_POSITIVE) {
            // equidistant neighbours: uniform at every bandwidth
            conditional_row(&d2[i], i, 1.0, &mut row);
        } else {
            let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
            let mut beta = 1.0 / (dmax - dmin);
            let mut converged = false;
            for _ in 0..MAX_BISECTION_STEPS {
                let perp = conditional_row(&d2[i], i, beta, &mut row);
                if (perp - perplexity).abs() < PERPLEXITY_TOLERANCE {
                    converged = true;
                    break;
                }
                if perp > perplexity {
                    lo = beta;
                    beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
                } else {
                    hi = beta;
                    beta = 0.5 * (beta + lo);
                }
            }
            if !converged {
                return Err(Error::Bisection { row: i });
            }
        }
        for j in 0..n {
            p[(i, j)] = row[j];
        }
    }
    Ok(p)
}

/// Joint affinities `(P + Pᵀ) / 2n`, summing to one.
pub fn perplexity_affinities(points: &DMatrix<f64>, perplexity: f64) -> Result<DMatrix<f64>> {
    let c = conditional_affinities(points, perplexity)?;
    let n = c.nrows() as f64;
    Ok((&c + c.transpose()) / (2.0 * n))
}

/// First two principal components, each scaled to a standard deviation of
/// 1e-4, plus seeded jitter.
fn pca_init(points: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Result<Vec<[f64; 2]>> {
    let n = points.nrows();
    let d = points.ncols();
    let mean = points.row_mean();
    let centred = DMatrix::from_fn(n, d, |i, j| points[(i, j)] - mean[j]);
    let cov = centred.transpose() * &centred / (n as f64);
    let eig = symmetric_eigen(&cov)?;
    let mut y = vec![[0.0; 2]; n];
    for c in 0..2.min(d) {
        let mut v = eig.vectors.column(d - 1 - c).clone_owned();
        let lead = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if lead < 0.0 {
            v = -v;
        }
        let proj = &centred * v;
        let std = (proj.norm_squared() / n as f64).sqrt();
        let scale = if std > 0.0 { INIT_STD / std } else { 0.0 };
        for i in 0..n {
            y[i][c] = proj[i] * scale;
        }
    }
    let jitter = Normal::new(0.0, INIT_JITTER).expect("positive std");
    for yi in &mut y {
        yi[0] += jitter.sample(rng);
        yi[1] += jitter.sample(rng);
    }
    Ok(y)
}

/// Gradient of KL(exaggeration·P‖Q) and KL(P‖Q) at `y`.
fn gradient(p: &DMatrix<f64>, y: &[[f64; 2]], exaggeration: f64, num: &mut DMatrix<f64>, grad: &mut [[f64; 2]]) -> f64 {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        num[(i, i)] = 0.0;
        for j in i + 1..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[(i, j)] = v;
            num[(j, i)] = v;
            z += 2.0 * v;
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        let mut g = [0.0; 2];
        for j in 0..n {
            if i == j {
                continue;
            }
            let q = (num[(i, j)] / z).max(f64::MIN_POSITIVE);
            let pij = p[(i, j)];
            if pij > 0.0 {
                kl += pij * (pij / q).ln();
            }
            let m = (exaggeration * pij - q) * num[(i, j)];
            g[0] += m * (y[i][0] - y[j][0]);
            g[1] += m * (y[i][1] - y[j][1]);
        }
        grad[i] = [4.0 * g[0], 4.0 * g[1]];
    }
    kl
}

pub fn tsne_embed(points: &DMatrix<f64>, cfg: &TsneConfig) -> Result<Embedding2D> {
    cfg.validate()?;
    let p = perplexity_affinities(points, cfg.perplexity)?;
    let n = points.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut y = pca_init(points, &mut rng)?;
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut grad = vec![[0.0; 2]; n];
    let mut num = DMatrix::zeros(n, n);
    let mut kl_history = Vec::with_capacity(cfg.iterations - cfg.exaggeration_iters + 1);

    for it in 0..cfg.iterations {
        let exaggerating = it < cfg.exaggeration_iters;
        let exaggeration = if exaggerating { cfg.early_exaggeration } else { 1.0 };
        let momentum = if exaggerating { cfg.initial_momentum } else { cfg.final_momentum };
        let kl = gradient(&p, &y, exaggeration, &mut num, &mut grad);
        if !exaggerating {
            kl_history.push(kl);
        }
        for i in 0..n {
            for c in 0..2 {
                let g = grad[i][c];
                gains[i][c] = if (g > 0.0) != (update[i][c] > 0.0) {
                    gains[i][c] + 0.2
                } else {
                    (gains[i][c] * 0.8).max(cfg.min_gain)
                };
                update[i][c] = momentum * update[i][c] - cfg.learning_rate * gains[i][c] * g;
                y[i][c] += update[i][c];
            }
        }
        let (mx, my) = y.iter().fold((0.0, 0.0), |(a, b), v| (a + v[0], b + v[1]));
        for v in &mut y {
            v[0] -= mx / n as f64;
            v[1] -= my / n as f64;
        }
        if y.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::NonFinite(format!("t-SNE coordinates diverged at iteration {it}")));
        }
    }
    let final_kl = gradient(&p, &y, 1.0, &mut num, &mut grad);
    kl_history.push(final_kl);
    Ok(Embedding2D {
        coords: y,
        final_kl,
        kl_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0, -1.0, -1.0, -1.0, 1.0],
        )
    }

    fn spread(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, 5, |i, c| ((i * 37 + c * 11) % 29) as f64 / 29.0 + 0.01 * c as f64)
    }

    #[test]
    fn row_sums_and_total_mass() {
        let x = spread(40);
        let c = conditional_affinities(&x, 5.0).unwrap();
        for r in c.row_iter() {
            assert!((r.sum() - 1.0).abs() < 1e-9);
        }
        let p = perplexity_affinities(&x, 5.0).unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-9);
        assert!((&p - p.transpose()).amax() < 1e-18);
    }

    #[test]
    fn row_perplexity_matches_target() {
        let x = spread(40);
        let c = conditional_affinities(&x, 7.5).unwrap();
        for r in c.row_iter() {
            let h: f64 = r.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
            assert!((h.exp() - 7.5).abs() < PERPLEXITY_TOLERANCE);
        }
    }

    #[test]
    fn simplex_is_uniform() {
        let p = perplexity_affinities(&simplex(), 1.2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 0.0 } else { 1.0 / 12.0 };
                assert!((p[(i, j)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn perplexity_guard() {
        assert!(perplexity_affinities(&spread(9), 3.0).is_err());
        assert!(perplexity_affinities(&spread(3), 0.5).is_err());
    }

    #[test]
    fn deterministic_and_descending() {
        let cfg = TsneConfig {
            perplexity: 5.0,
            iterations: 400,
            exaggeration_iters: 100,
            seed: 9,
            ..Default::default()
        };
        let x = spread(30);
        let a = tsne_embed(&x, &cfg).unwrap();
        let b = tsne_embed(&x, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.final_kl >= 0.0);
        assert!(a.final_kl <= a.kl_history[0]);
        assert_eq!(a.kl_history.len(), 301);
    }
}
