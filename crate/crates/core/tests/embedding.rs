mod common;

use nalgebra::DMatrix;
use strokebench_core::embedding::*;

use common::{blobs, rng};

/// Largest margin over a grid of projection directions between the first
/// `split` points and the rest; positive means linearly separable.
fn separation_margin(coords: &[[f64; 2]], split: usize) -> f64 {
    (0..3600)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / 1800.0;
            let (s, c) = t.sin_cos();
            let proj = |p: &[f64; 2]| p[0] * c + p[1] * s;
            let a_max = coords[..split].iter().map(proj).fold(f64::NEG_INFINITY, f64::max);
            let b_min = coords[split..].iter().map(proj).fold(f64::INFINITY, f64::min);
            b_min - a_max
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn two_blobs(seed: u64) -> DMatrix<f64> {
    blobs(&mut rng(seed), &[vec![0.25; 5], vec![0.75; 5]], 20, 0.05)
}

fn small_cfg() -> TsneConfig {
    TsneConfig {
        perplexity: 10.0,
        seed: 3,
        ..TsneConfig::default()
    }
}

#[test]
fn two_blobs_embed_separably() {
    for seed in 0..3 {
        let e = tsne_embed(&two_blobs(60 + seed), &small_cfg()).unwrap();
        assert_eq!(e.coords.len(), 40);
        assert!(e.coords.iter().flatten().all(|v| v.is_finite()));
        let margin = separation_margin(&e.coords, 20);
        assert!(margin > 0.0, "seed {seed}: margin {margin}");
    }
}

#[test]
fn kl_settles_after_exaggeration() {
    let e = tsne_embed(&two_blobs(70), &small_cfg()).unwrap();
    let h = &e.kl_history;
    assert!(h.len() > 50);
    for i in 0..h.len() - 50 {
        assert!(h[i + 50] <= h[i] + 1e-6, "window at {i}: {} -> {}", h[i], h[i + 50]);
    }
    assert!(e.final_kl <= h[0] + 1e-12);
    assert!(e.final_kl >= 0.0);
}

#[test]
fn identical_seed_identical_coords() {
    let p = two_blobs(71);
    let a = tsne_embed(&p, &small_cfg()).unwrap();
    let b = tsne_embed(&p, &small_cfg()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn joint_affinities_are_normalized() {
    let p = blobs(&mut rng(72), &[vec![0.3; 5], vec![0.6; 5], vec![0.9; 5]], 8, 0.05);
    let cond = conditional_affinities(&p, 5.0).unwrap();
    for i in 0..cond.nrows() {
        assert!((cond.row(i).sum() - 1.0).abs() < 1e-9);
        assert_eq!(cond[(i, i)], 0.0);
        let row: Vec<f64> = cond.row(i).iter().copied().filter(|&v| v > 0.0).collect();
        let entropy: f64 = -row.iter().map(|v| v * v.log2()).sum::<f64>();
        assert!((entropy.exp2() - 5.0).abs() < 1e-3, "row {i}: perplexity {}", entropy.exp2());
    }
    let joint = perplexity_affinities(&p, 5.0).unwrap();
    assert!((joint.sum() - 1.0).abs() < 1e-9);
    assert_eq!(joint, joint.transpose());
}

#[test]
fn simplex_is_uniform() {
    let mut p = DMatrix::zeros(4, 5);
    for i in 0..4 {
        p[(i, i)] = 1.0;
    }
    let joint = perplexity_affinities(&p, 1.2).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let expected = if i == j { 0.0 } else { 1.0 / 12.0 };
            assert!((joint[(i, j)] - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let p = two_blobs(73);
    assert!(perplexity_affinities(&p, 40.0 / 3.0).is_err());
    assert!(perplexity_affinities(&DMatrix::zeros(3, 5), 0.5).is_err());
    let bad = TsneConfig {
        learning_rate: 0.0,
        ..TsneConfig::default()
    };
    assert!(tsne_embed(&p, &bad).is_err());
}
