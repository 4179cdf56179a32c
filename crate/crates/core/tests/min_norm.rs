//! Least-norm convex combinations against brute force and KKT checks.

use nqn_core::linalg::{dot, SmallMatrix};
use nqn_core::subgrad::{kkt_residual, min_norm_point, GradientHistory, KKT_TOL};
use nqn_core::{min_norm_combination, select_active_set, Bounds, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn combine(points: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; points[0].len()];
    for (p, w) in points.iter().zip(lambda) {
        for (o, v) in out.iter_mut().zip(p) {
            *o += w * v;
        }
    }
    out
}

/// Smallest ‖Σλᵢgᵢ‖ over a simplex grid of the given step.
fn grid_min_norm(points: &[Vec<f64>], step: f64) -> f64 {
    let k = (1.0 / step).round() as usize;
    let norm = |lam: &[f64]| dot(&combine(points, lam), &combine(points, lam)).sqrt();
    match points.len() {
        1 => norm(&[1.0]),
        2 => (0..=k).map(|i| i as f64 * step).map(|a| norm(&[a, 1.0 - a])).fold(f64::INFINITY, f64::min),
        3 => {
            let mut best = f64::INFINITY;
            for i in 0..=k {
                for j in 0..=(k - i) {
                    let (a, b) = (i as f64 * step, j as f64 * step);
                    best = best.min(norm(&[a, b, (1.0 - a - b).max(0.0)]));
                }
            }
            best
        }
        _ => unreachable!(),
    }
}

fn as_slices(points: &[Vec<f64>]) -> Vec<&[f64]> {
    points.iter().map(Vec::as_slice).collect()
}

#[test]
fn matches_simplex_grid_for_up_to_three_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..60 {
        let l = 1 + case % 3;
        let n = rng.gen_range(2..=5);
        let points: Vec<Vec<f64>> = (0..l).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let res = min_norm_point(&as_slices(&points)).unwrap();
        let got = dot(&res.g_tilde, &res.g_tilde).sqrt();
        let brute = grid_min_norm(&points, 1e-3);
        assert!((got - brute).abs() <= 2e-3, "case {case}: {got} vs {brute}");
        assert!(got <= brute + 1e-12);
    }
}

#[test]
fn orthogonal_pair_weights_are_half() {
    let points = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let res = min_norm_point(&as_slices(&points)).unwrap();
    assert!((res.lambda[0] - 0.5).abs() < 1e-12 && (res.lambda[1] - 0.5).abs() < 1e-12);
    // the grid minimizer over λ ∈ [0, 1] at step 1e-4 is λ = ½
    let best = (0..=10_000)
        .map(|i| i as f64 * 1e-4)
        .min_by(|a, b| {
            let na = a * a + (1.0 - a) * (1.0 - a);
            let nb = b * b + (1.0 - b) * (1.0 - b);
            na.partial_cmp(&nb).unwrap()
        })
        .unwrap();
    assert!((best - 0.5).abs() < 1e-9);
}

#[test]
fn random_gram_matrices_meet_kkt_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..400 {
        let l = 1 + case % 20;
        let n = rng.gen_range(1..=25);
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let points: Vec<Vec<f64>> =
            (0..l).map(|_| (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()).collect();
        let res = min_norm_point(&as_slices(&points)).unwrap();
        assert!(res.kkt_residual <= KKT_TOL, "case {case}: {}", res.kkt_residual);
        let sum: f64 = res.lambda.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-10);
        assert!(res.lambda.iter().all(|&w| (0.0..=1.0).contains(&w)));
        assert_eq!(res.g_tilde, combine(&points, &res.lambda));

        let mut gram = SmallMatrix::zeros(l);
        for i in 0..l {
            for j in 0..l {
                gram.set(i, j, dot(&points[i], &points[j]));
            }
        }
        assert!(kkt_residual(&gram, &res.lambda) <= KKT_TOL);
    }
}

#[test]
fn deterministic_for_fixed_input() {
    let points = vec![vec![1.0, 2.0, -1.0], vec![-0.5, 0.3, 2.0], vec![0.1, -2.0, 0.4]];
    let a = min_norm_point(&as_slices(&points)).unwrap();
    let b = min_norm_point(&as_slices(&points)).unwrap();
    assert_eq!(a, b);
}

/// Gradients of `|x₁ − x₂| + ½(x₁ + 0.1x₂)²` on either smooth piece.
fn myopic2d_piece(x: &[f64], upper_piece: bool) -> Vec<f64> {
    let q = x[0] + 0.1 * x[1];
    let s = if upper_piece { 1.0 } else { -1.0 };
    vec![s + q, -s + 0.1 * q]
}

#[test]
fn myopic_two_dimensional_subgradient() {
    let x = [-0.5, -0.5];
    let g1 = myopic2d_piece(&x, true);
    let g2 = myopic2d_piece(&x, false);
    assert!((g1[0] - 0.45).abs() < 1e-15 && (g1[1] + 1.055).abs() < 1e-15);
    assert!((g2[0] + 1.55).abs() < 1e-15 && (g2[1] - 0.945).abs() < 1e-15);
    let mut hist = GradientHistory::new(20);
    hist.push(&x, &g2);
    hist.push(&x, &g1);
    let res = min_norm_combination(&hist).unwrap();
    assert!((res.g_tilde[0] + 0.3025).abs() < 1e-2, "{:?}", res.g_tilde);
    assert!((res.g_tilde[1] + 0.3025).abs() < 1e-2, "{:?}", res.g_tilde);
}

#[test]
fn myopic_two_dimensional_selection() {
    // iterates just left of the kink and one on it, x₁ tight at −0.5
    let b = Bounds::new(vec![f64::NEG_INFINITY; 2], vec![-0.5, f64::INFINITY]).unwrap();
    let mut hist = GradientHistory::new(20);
    for &a in &[-0.49, -0.501, -0.499, -0.5001] {
        let x = [-0.5, a];
        hist.push(&x, &myopic2d_piece(&x, a < -0.5));
    }
    let x = [-0.5, -0.5001];
    let g = myopic2d_piece(&x, true);
    let (v1, _) = select_active_set(Variant::V1, &x, &g, &hist, &b);
    let (v2, fallback) = select_active_set(Variant::V2, &x, &g, &hist, &b);
    assert!(v1.is_empty());
    assert!(!fallback);
    assert_eq!(v2.indices(), vec![0]);
    let (v3, _) = select_active_set(Variant::V3, &x, &g, &hist, &b);
    assert_eq!(v3, v1);
}
