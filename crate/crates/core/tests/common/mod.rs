#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nqn_core::geometry::Bounds;
use nqn_core::lbfgs::{CurvaturePair, LbfgsMemory};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Memory filled through `update` with pairs from a random SPD curvature map
/// `H` (eigenvalues log-uniform in [0.01, 100]) plus a 30% perturbation of
/// `Hs`; `sᵀy > 0` is enforced by resampling.
pub fn random_memory(rng: &mut ChaCha8Rng, n: usize, m: usize, updates: usize) -> LbfgsMemory {
    let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
    let eig = DVector::from_fn(n, |_, _| 10f64.powf(rng.gen_range(-2.0..2.0)));
    let h = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    let mut mem = LbfgsMemory::new(n, m);
    mem.set_theta(rng.gen_range(1.0..100.0));
    for _ in 0..updates {
        loop {
            let s: DVector<f64> = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let hs = &h * &s;
            let r: DVector<f64> = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let y = &hs + &r * (0.3 * hs.norm() / r.norm().max(1e-300));
            if s.dot(&y) > 0.0 {
                mem.update(&CurvaturePair::new(s.as_slice().to_vec(), y.as_slice().to_vec()), 1e-8);
                break;
            }
        }
    }
    mem
}

/// Random box with a mix of finite and infinite sides, and a feasible point
/// that sits exactly on a bound in roughly half of its coordinates.
pub fn random_box_point(rng: &mut ChaCha8Rng, n: usize) -> (Bounds, Vec<f64>) {
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let l = if rng.gen_bool(0.85) { rng.gen_range(-5.0..1.0) } else { f64::NEG_INFINITY };
        let u = if rng.gen_bool(0.85) {
            let base = if l.is_finite() { l } else { -5.0 };
            base + rng.gen_range(0.0..6.0)
        } else {
            f64::INFINITY
        };
        lower.push(l);
        upper.push(u);
        let roll: f64 = rng.gen();
        let xi = if roll < 0.25 && l.is_finite() {
            l
        } else if roll < 0.5 && u.is_finite() {
            u
        } else {
            let lo = if l.is_finite() { l } else { u.min(0.0) - 3.0 };
            let hi = if u.is_finite() { u } else { lo.max(0.0) + 3.0 };
            if lo < hi {
                rng.gen_range(lo..hi)
            } else {
                lo
            }
        };
        x.push(xi);
    }
    (Bounds::new(lower, upper).expect("valid box"), x)
}

/// Random gradient with occasional exact zeros.
pub fn random_gradient(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(-10.0..10.0) }).collect()
}
