//! Approximate minimum-norm subgradient from recent gradients, and the
//! active-set prediction built on it.
//!
//! The least-norm point of the convex hull of the stored gradients is found
//! with Wolfe's minimum-norm-point algorithm, run entirely on the Gram matrix
//! of the history so that the vector dimension only enters through one
//! O(l²·n) product.

use std::collections::VecDeque;

use crate::geometry::{binding_set, ActiveSet, Bounds};
use crate::linalg::{dot, solve_symmetric, SmallMatrix};

/// Required KKT accuracy of the simplex QP, relative to `max(1, max ‖gᵢ‖²)`.
pub const KKT_TOL: f64 = 1e-8;

/// Most recent accepted iterates and their gradients, newest last.
#[derive(Debug, Clone)]
pub struct GradientHistory {
    capacity: usize,
    entries: VecDeque<(Vec<f64>, Vec<f64>)>,
}

impl GradientHistory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "gradient history needs capacity >= 1");
        Self { capacity, entries: VecDeque::with_capacity(capacity + 1) }
    }

    pub fn push(&mut self, x: &[f64], g: &[f64]) {
        assert_eq!(x.len(), g.len(), "iterate and gradient lengths differ");
        if let Some((x0, _)) = self.entries.front() {
            assert_eq!(x0.len(), x.len(), "history dimension mismatch");
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((x.to_vec(), g.to_vec()));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iterates(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.iter().map(|(x, _)| x.as_slice())
    }

    pub fn gradients(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.iter().map(|(_, g)| g.as_slice())
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormResult {
    pub g_tilde: Vec<f64>,
    /// Convex weights, one per history entry (oldest first).
    pub lambda: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MinNormError {
    #[error("gradient history is empty")]
    EmptyHistory,
    #[error("simplex QP did not converge after {iterations} iterations (KKT residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

/// Default iteration cap for `l` points.
pub fn default_iteration_cap(l: usize) -> usize {
    10 * l * l + 100
}

/// Least-norm convex combination of the history gradients.
pub fn min_norm_combination(history: &GradientHistory) -> Result<MinNormResult, MinNormError> {
    let grads: Vec<&[f64]> = history.gradients().collect();
    min_norm_point(&grads)
}

/// Least-norm point in the convex hull of `points`.
pub fn min_norm_point(points: &[&[f64]]) -> Result<MinNormResult, MinNormError> {
    let l = points.len();
    if l == 0 {
        return Err(MinNormError::EmptyHistory);
    }
    let mut gram = SmallMatrix::zeros(l);
    for i in 0..l {
        for j in 0..=i {
            let v = dot(points[i], points[j]);
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    let (lambda, iterations) = solve_simplex_qp(&gram, default_iteration_cap(l))?;
    let residual = kkt_residual(&gram, &lambda);
    if !(residual <= KKT_TOL) {
        return Err(MinNormError::NotConverged { iterations, residual });
    }
    let n = points[0].len();
    let mut g_tilde = vec![0.0; n];
    for (w, p) in lambda.iter().zip(points) {
        if *w != 0.0 {
            for (acc, v) in g_tilde.iter_mut().zip(p.iter()) {
                *acc += w * v;
            }
        }
    }
    Ok(MinNormResult { g_tilde, lambda, kkt_residual: residual, iterations })
}

fn gram_scale(gram: &SmallMatrix) -> f64 {
    (0..gram.dim()).fold(1.0_f64, |m, i| m.max(gram.get(i, i)))
}

/// Scaled violation of the optimality conditions of
/// `min ½λᵀGλ  s.t. Σλ = 1, λ ≥ 0`, including simplex feasibility.
pub fn kkt_residual(gram: &SmallMatrix, lambda: &[f64]) -> f64 {
    let q = gram.mul_vec(lambda);
    let nu = dot(lambda, &q);
    let scale = gram_scale(gram);
    let mut worst = 0.0_f64;
    for (&w, &qi) in lambda.iter().zip(&q) {
        worst = worst.max((nu - qi).max(0.0) / scale);
        worst = worst.max(w.abs() * (qi - nu).abs() / scale);
        worst = worst.max((-w).max(0.0));
    }
    let sum: f64 = lambda.iter().sum();
    worst.max((sum - 1.0).abs())
}

/// Wolfe's minimum-norm-point iteration on a Gram matrix.
fn solve_simplex_qp(gram: &SmallMatrix, cap: usize) -> Result<(Vec<f64>, usize), MinNormError> {
    let l = gram.dim();
    let scale = gram_scale(gram);
    let major_tol = 1e-13 * scale;
    let positive_tol = 1e-15;

    let start = (0..l).min_by(|&a, &b| gram.get(a, a).total_cmp(&gram.get(b, b))).expect("non-empty");
    let mut corral: Vec<usize> = vec![start];
    let mut weights: Vec<f64> = vec![1.0];
    let mut iterations = 0;

    let full = |corral: &[usize], weights: &[f64]| {
        let mut lam = vec![0.0; l];
        for (&i, &w) in corral.iter().zip(weights) {
            lam[i] = w;
        }
        lam
    };

    loop {
        iterations += 1;
        if iterations > cap {
            let lam = full(&corral, &weights);
            return Err(MinNormError::NotConverged { iterations, residual: kkt_residual(gram, &lam) });
        }
        let lam = full(&corral, &weights);
        let q = gram.mul_vec(&lam);
        let xx = dot(&lam, &q);
        let (entering, qmin) =
            q.iter().enumerate().fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
        if xx - qmin <= major_tol || corral.contains(&entering) {
            return Ok((lam, iterations));
        }
        corral.push(entering);
        weights.push(0.0);

        // minor cycle
        loop {
            iterations += 1;
            if iterations > cap {
                let lam = full(&corral, &weights);
                return Err(MinNormError::NotConverged { iterations, residual: kkt_residual(gram, &lam) });
            }
            let Some(mu) = affine_minimizer(gram, &corral) else {
                // affinely dependent corral: keep the last feasible weights
                return Ok((full(&corral, &weights), iterations));
            };
            if mu.iter().all(|&v| v > positive_tol) {
                weights = mu;
                break;
            }
            let mut step = f64::INFINITY;
            for (&w, &m) in weights.iter().zip(&mu) {
                if m <= positive_tol {
                    let denom = w - m;
                    let ratio = if denom > 0.0 { w / denom } else { 0.0 };
                    step = step.min(ratio);
                }
            }
            let step = step.clamp(0.0, 1.0);
            for (w, &m) in weights.iter_mut().zip(&mu) {
                *w += step * (m - *w);
            }
            // drop the points whose weight reached zero (at least one)
            let mut drop_idx = None;
            let mut smallest = f64::INFINITY;
            for (pos, &w) in weights.iter().enumerate() {
                if w < smallest {
                    smallest = w;
                    drop_idx = Some(pos);
                }
            }
            let mut keep_corral = Vec::with_capacity(corral.len());
            let mut keep_weights = Vec::with_capacity(corral.len());
            for (pos, (&i, &w)) in corral.iter().zip(&weights).enumerate() {
                if w > positive_tol && Some(pos) != drop_idx {
                    keep_corral.push(i);
                    keep_weights.push(w);
                }
            }
            let total: f64 = keep_weights.iter().sum();
            for w in &mut keep_weights {
                *w /= total;
            }
            corral = keep_corral;
            weights = keep_weights;
        }
    }
}

/// Affine minimizer over the corral: `min ½μᵀG_SSμ  s.t. Σμ = 1`.
fn affine_minimizer(gram: &SmallMatrix, corral: &[usize]) -> Option<Vec<f64>> {
    let c = corral.len();
    if c == 1 {
        return Some(vec![1.0]);
    }
    let mut kkt = SmallMatrix::zeros(c + 1);
    for (a, &i) in corral.iter().enumerate() {
        for (b, &j) in corral.iter().enumerate() {
            kkt.set(a, b, gram.get(i, j));
        }
        kkt.set(a, c, 1.0);
        kkt.set(c, a, 1.0);
    }
    let mut rhs = vec![0.0; c + 1];
    rhs[c] = 1.0;
    let sol = solve_symmetric(&kkt, &rhs).ok()?;
    let mu = sol[..c].to_vec();
    if mu.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(mu)
}

/// Union of the binding sets predicted by `g_tilde` and by `g`.
pub fn predict_active_set(x: &[f64], g: &[f64], g_tilde: &[f64], b: &Bounds) -> ActiveSet {
    binding_set(x, g_tilde, b).union(&binding_set(x, g, b))
}
