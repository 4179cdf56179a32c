//! Central-difference gradient verification away from kinks.

use nqn_core::linalg::norm_inf;
use nqn_core::Objective;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("finite-difference stencil in coordinate {coordinate} crosses a kink")]
pub struct KinkDetected {
    pub coordinate: usize,
}

/// Step `10⁻⁶·(1 + |x_i|)`.
#[inline]
pub fn fd_step(xi: f64) -> f64 {
    1e-6 * (1.0 + xi.abs())
}

/// Largest central-difference error at `x`, relative to `max(1, ‖∇f(x)‖∞)`.
/// Fails when any stencil point selects a different smooth piece than `x`.
pub fn fd_check(problem: &Problem, x: &[f64]) -> Result<f64, KinkDetected> {
    let base_sig = problem.signature(x);
    let (_, g) = problem.evaluate(x);
    let scale = norm_inf(&g).max(1.0);
    let mut worst = 0.0_f64;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        probe[i] = x[i] + h;
        if problem.signature(&probe) != base_sig {
            return Err(KinkDetected { coordinate: i });
        }
        let (fp, _) = problem.evaluate(&probe);
        probe[i] = x[i] - h;
        if problem.signature(&probe) != base_sig {
            return Err(KinkDetected { coordinate: i });
        }
        let (fm, _) = problem.evaluate(&probe);
        probe[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdSummary {
    pub name: &'static str,
    pub n: usize,
    pub points: usize,
    /// Samples rejected because their stencil crossed a kink.
    pub resampled: usize,
    pub max_rel_error: f64,
}

/// Checks `points` random points drawn uniformly from the problem box
/// intersected with `[mid − 5, mid + 5]`, resampling points on kinks.
///
/// # Panics
/// When more than `1000·points` consecutive-or-not samples hit kinks.
pub fn fd_check_random(problem: &Problem, points: usize, seed: u64) -> FdSummary {
    let b = problem.bounds();
    let mid = b.midpoint();
    let n = mid.len();
    let lo: Vec<f64> = (0..n).map(|i| b.lower()[i].max(mid[i] - 5.0)).collect();
    let hi: Vec<f64> = (0..n).map(|i| b.upper()[i].min(mid[i] + 5.0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = FdSummary { name: problem.name(), n, points: 0, resampled: 0, max_rel_error: 0.0 };
    while summary.points < points {
        assert!(summary.resampled <= 1000 * points.max(1), "{}: too many samples on kinks", problem.name());
        let x: Vec<f64> = (0..n).map(|i| rng.gen_range(lo[i]..hi[i])).collect();
        match fd_check(problem, &x) {
            Ok(err) => {
                summary.points += 1;
                summary.max_rel_error = summary.max_rel_error.max(err);
            }
            Err(_) => summary.resampled += 1,
        }
    }
    summary
}
