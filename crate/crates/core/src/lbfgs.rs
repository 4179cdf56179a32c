//! Limited-memory BFGS curvature model in compact form.
//!
//! The model matrix is
//!
//! ```text
//! B = θI − W M⁻¹ Wᵀ,   W = [Y, θS],   M = [[−D, Lᵀ], [L, θSᵀS]]
//! ```
//!
//! with `D = diag(sᵢᵀyᵢ)` and `L` the strictly lower triangle of `SᵀY`.
//! Solving the subspace system `B_FF p_F = −g_F` over the free indices `F`
//! goes through Sherman–Morrison–Woodbury:
//!
//! ```text
//! B_FF⁻¹ = (1/θ) I + (1/θ²) W_F N⁻¹ W_Fᵀ,   N = M − (1/θ) W_Fᵀ W_F
//! ```
//!
//! so each solve costs O(m²·|F| + m³). Blocks of `N` that involve `S` are
//! assembled from the active rows (`θ S_AᵀS_A` and friends), which is exact
//! when the active set is empty.
//!
//! When `2k ≥ |F|` for `k` stored pairs the columns of `W_F` can be
//! dependent and `N` loses accuracy. Those solves run the BFGS recursion
//! densely in an orthonormal basis `Q` of `span(S, Y)`, so that
//! `B = θI + Q (B̂ − θI) Qᵀ`, then factor `B_FF` directly. The cost is
//! O(k²·n + k·|F|²), the same class as the compact path.

use std::collections::VecDeque;

use crate::geometry::ActiveSet;
use crate::linalg::{cholesky_solve, dot, norm2, norm_inf, solve_symmetric, SmallMatrix};

/// Upper clamp for the initial scaling `θ`.
pub const THETA_MAX: f64 = 1e8;

/// `θ = max(1, min(‖g‖∞, 10⁸))`.
pub fn theta_init(g: &[f64]) -> f64 {
    let ninf = norm_inf(g);
    // NaN gradients fall to the lower clamp
    if ninf.is_nan() {
        return 1.0;
    }
    ninf.clamp(1.0, THETA_MAX)
}

/// An iterate difference `s` and the matching gradient difference `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePair {
    pub s: Vec<f64>,
    pub y: Vec<f64>,
}

impl CurvaturePair {
    pub fn new(s: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(s.len(), y.len(), "s and y must have equal length");
        Self { s, y }
    }

    /// `sᵀy > eps·‖s‖·‖y‖`.
    pub fn satisfies_curvature(&self, eps_skip: f64) -> bool {
        let sy = dot(&self.s, &self.y);
        sy > eps_skip * norm2(&self.s) * norm2(&self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Stored,
    /// Stored after dropping the oldest pair.
    StoredEvicting,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("compact middle matrix is numerically singular (pivot {pivot:e})")]
pub struct NumericalBreakdown {
    pub pivot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSolveReport {
    pub direction: Vec<f64>,
    pub free_dimension: usize,
    pub flop_estimate: u64,
}

/// Ring buffer of curvature pairs with the cached `SᵀY` products (which hold
/// both `L` and `D`).
///
/// Pairs are stored scaled by `1/‖s‖`. The BFGS update is invariant under a
/// joint rescaling of `(s, y)`, so the implied matrix is unchanged while the
/// cached Gram blocks stay well scaled when steps become tiny.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    n: usize,
    capacity: usize,
    theta: f64,
    s: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
    /// sty[i][j] = sᵢᵀyⱼ
    sty: VecDeque<VecDeque<f64>>,
    skipped: usize,
}

impl LbfgsMemory {
    pub fn new(n: usize, capacity: usize) -> Self {
        assert!(capacity >= 1, "L-BFGS memory needs capacity >= 1");
        Self {
            n,
            capacity,
            theta: 1.0,
            s: VecDeque::with_capacity(capacity + 1),
            y: VecDeque::with_capacity(capacity + 1),
            sty: VecDeque::with_capacity(capacity + 1),
            skipped: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn set_theta(&mut self, theta: f64) {
        assert!(theta.is_finite() && theta > 0.0, "theta must be positive, got {theta}");
        self.theta = theta;
    }

    /// Stored pairs, oldest first (in their normalized scaling).
    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.s.iter().zip(&self.y).map(|(s, y)| (s.as_slice(), y.as_slice()))
    }

    pub fn clear(&mut self) {
        self.s.clear();
        self.y.clear();
        self.sty.clear();
    }

    /// Stores the pair if it passes the skip rule, evicting the oldest pair
    /// when the buffer is full. Cached products are refreshed in O(m·n).
    pub fn update(&mut self, pair: &CurvaturePair, eps_skip: f64) -> UpdateOutcome {
        assert_eq!(pair.s.len(), self.n, "curvature pair has wrong dimension");
        if !pair.satisfies_curvature(eps_skip) {
            self.skipped += 1;
            return UpdateOutcome::Skipped;
        }
        let scale = 1.0 / norm2(&pair.s);
        let s: Vec<f64> = pair.s.iter().map(|v| v * scale).collect();
        let y: Vec<f64> = pair.y.iter().map(|v| v * scale).collect();

        let evict = self.s.len() == self.capacity;
        if evict {
            self.s.pop_front();
            self.y.pop_front();
            self.sty.pop_front();
            for row in self.sty.iter_mut() {
                row.pop_front();
            }
        }

        for (i, si) in self.s.iter().enumerate() {
            self.sty[i].push_back(dot(si, &y));
        }
        let mut sty_row: VecDeque<f64> = self.y.iter().map(|yj| dot(&s, yj)).collect();
        sty_row.push_back(dot(&s, &y));
        self.sty.push_back(sty_row);
        self.s.push_back(s);
        self.y.push_back(y);

        if evict {
            UpdateOutcome::StoredEvicting
        } else {
            UpdateOutcome::Stored
        }
    }

    /// Minimizer of `gᵀp + ½pᵀBp` subject to `p_i = 0` for `i` in `active`.
    pub fn subspace_solve(&self, g: &[f64], active: &ActiveSet) -> Result<SubspaceSolveReport, NumericalBreakdown> {
        assert_eq!(g.len(), self.n, "gradient has wrong dimension");
        assert_eq!(active.dim(), self.n, "active set has wrong dimension");
        let free = active.complement();
        let fixed = active.indices();
        let (f, t, k) = (free.len(), fixed.len(), self.len());
        let theta = self.theta;
        let mut direction = vec![0.0; self.n];

        if f == 0 {
            return Ok(SubspaceSolveReport { direction, free_dimension: 0, flop_estimate: 0 });
        }
        let g_f: Vec<f64> = free.iter().map(|&i| g[i]).collect();
        if k == 0 {
            for (&i, gi) in free.iter().zip(&g_f) {
                direction[i] = -gi / theta;
            }
            return Ok(SubspaceSolveReport { direction, free_dimension: f, flop_estimate: f as u64 });
        }

        if 2 * k >= f {
            return self.dense_free_solve(&free, &g_f);
        }

        let gather = |v: &[f64], idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| v[i]).collect() };
        let y_f: Vec<Vec<f64>> = self.y.iter().map(|y| gather(y, &free)).collect();
        let s_f: Vec<Vec<f64>> = self.s.iter().map(|s| gather(s, &free)).collect();
        let y_a: Vec<Vec<f64>> = self.y.iter().map(|y| gather(y, &fixed)).collect();
        let s_a: Vec<Vec<f64>> = self.s.iter().map(|s| gather(s, &fixed)).collect();

        let mut mid = SmallMatrix::zeros(2 * k);
        for i in 0..k {
            for j in 0..=i {
                let mut v = -dot(&y_f[i], &y_f[j]) / theta;
                if i == j {
                    v -= self.sty[i][i];
                }
                mid.set(i, j, v);
                mid.set(j, i, v);

                let ss = theta * dot(&s_a[i], &s_a[j]);
                mid.set(k + i, k + j, ss);
                mid.set(k + j, k + i, ss);
            }
            for j in 0..k {
                // Y-row i, S-column j: s_jAᵀy_iA − [j ≤ i] s_jᵀy_i
                let mut v = dot(&s_a[j], &y_a[i]);
                if j <= i {
                    v -= self.sty[j][i];
                }
                mid.set(i, k + j, v);
                mid.set(k + j, i, v);
            }
        }

        let mut rhs = vec![0.0; 2 * k];
        for i in 0..k {
            rhs[i] = dot(&y_f[i], &g_f);
            rhs[k + i] = theta * dot(&s_f[i], &g_f);
        }
        let z = solve_symmetric(&mid, &rhs).map_err(|e| NumericalBreakdown { pivot: e.pivot })?;

        let inv_theta = 1.0 / theta;
        let inv_theta2 = inv_theta * inv_theta;
        for (pos, &i) in free.iter().enumerate() {
            let mut wz = 0.0;
            for j in 0..k {
                wz += z[j] * y_f[j][pos] + theta * z[k + j] * s_f[j][pos];
            }
            direction[i] = -inv_theta * g_f[pos] - inv_theta2 * wz;
        }
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(NumericalBreakdown { pivot: f64::NAN });
        }

        let (k64, f64_, t64) = (k as u64, f as u64, t as u64);
        let flop_estimate =
            2 * k64 * k64 * f64_ + 2 * k64 * k64 * t64 + 6 * k64 * f64_ + 4 * f64_ + 6 * k64 * k64 * k64;
        Ok(SubspaceSolveReport { direction, free_dimension: f, flop_estimate })
    }
}

impl LbfgsMemory {
    /// Orthonormal basis of `span(S, Y)`, or `None` when it is cheaper to
    /// work in the full space.
    fn pair_basis(&self) -> Option<Vec<Vec<f64>>> {
        if 2 * self.len() >= self.n {
            return None;
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(2 * self.len());
        for v in self.s.iter().chain(self.y.iter()) {
            let mut w = v.clone();
            let norm0 = norm2(&w);
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let norm = norm2(&w);
            if norm > 1e-10 * norm0 {
                w.iter_mut().for_each(|wi| *wi /= norm);
                basis.push(w);
            }
        }
        Some(basis)
    }

    fn dense_free_solve(&self, free: &[usize], g_f: &[f64]) -> Result<SubspaceSolveReport, NumericalBreakdown> {
        let theta = self.theta;
        let basis = self.pair_basis();
        let coords = |v: &[f64]| -> Vec<f64> {
            match &basis {
                Some(qs) => qs.iter().map(|q| dot(q, v)).collect(),
                None => v.to_vec(),
            }
        };
        let r = basis.as_ref().map_or(self.n, Vec::len);
        let mut bhat = SmallMatrix::zeros(r);
        for i in 0..r {
            bhat.set(i, i, theta);
        }
        for (s, y) in self.s.iter().zip(&self.y) {
            let (sh, yh) = (coords(s), coords(y));
            let bs = bhat.mul_vec(&sh);
            let (sbs, ys) = (dot(&sh, &bs), dot(&yh, &sh));
            if !(sbs > 0.0 && ys > 0.0) {
                return Err(NumericalBreakdown { pivot: sbs.min(ys) });
            }
            for i in 0..r {
                for j in 0..r {
                    bhat.set(i, j, bhat.get(i, j) + yh[i] * yh[j] / ys - bs[i] * bs[j] / sbs);
                }
            }
        }

        let f = free.len();
        let mut bff = SmallMatrix::zeros(f);
        match &basis {
            None => {
                for (a, &i) in free.iter().enumerate() {
                    for (c, &j) in free.iter().enumerate() {
                        bff.set(a, c, bhat.get(i, j));
                    }
                }
            }
            Some(qs) => {
                // B_FF = θI + Q_F (B̂ − θI) Q_Fᵀ
                let qf: Vec<Vec<f64>> = qs.iter().map(|q| free.iter().map(|&i| q[i]).collect()).collect();
                let mut t = vec![vec![0.0; r]; f];
                for (row, t_row) in t.iter_mut().enumerate() {
                    for a in 0..r {
                        let mut acc = 0.0;
                        for b in 0..r {
                            let c = bhat.get(b, a) - if a == b { theta } else { 0.0 };
                            acc += qf[b][row] * c;
                        }
                        t_row[a] = acc;
                    }
                }
                for row in 0..f {
                    for col in 0..=row {
                        let mut v = if row == col { theta } else { 0.0 };
                        for a in 0..r {
                            v += t[row][a] * qf[a][col];
                        }
                        bff.set(row, col, v);
                        bff.set(col, row, v);
                    }
                }
            }
        }
        let rhs: Vec<f64> = g_f.iter().map(|v| -v).collect();
        let p_f = cholesky_solve(&bff, &rhs).map_err(|e| NumericalBreakdown { pivot: e.pivot })?;
        let mut direction = vec![0.0; self.n];
        for (&i, v) in free.iter().zip(p_f) {
            direction[i] = v;
        }
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(NumericalBreakdown { pivot: f64::NAN });
        }
        let (k64, f64_, n64, r64) = (self.len() as u64, f as u64, self.n as u64, r as u64);
        let flop_estimate =
            4 * r64 * k64 * n64 + 4 * k64 * r64 * r64 + 2 * f64_ * r64 * (r64 + f64_) + f64_ * f64_ * f64_ / 3;
        Ok(SubspaceSolveReport { direction, free_dimension: f, flop_estimate })
    }
}

/// Dense `B` built by applying the rank-two BFGS update to `θI` over the
/// stored pairs, oldest first. Test-scale only: O(n²·m) work and n² storage.
pub fn dense_materialize(mem: &LbfgsMemory) -> SmallMatrix {
    let n = mem.dim();
    assert!(n <= 256, "dense materialization is a test oracle for small n");
    let mut b = SmallMatrix::zeros(n);
    for i in 0..n {
        b.set(i, i, mem.theta());
    }
    for (s, y) in mem.pairs() {
        let ys = dot(y, s);
        assert!(ys > 0.0, "stored pair violates the curvature condition");
        let bs = b.mul_vec(s);
        let sbs = dot(s, &bs);
        for i in 0..n {
            for j in 0..n {
                let v = b.get(i, j) + y[i] * y[j] / ys - bs[i] * bs[j] / sbs;
                b.set(i, j, v);
            }
        }
    }
    b
}
