//! Vector kernels and a small dense solver for the m×m-scale systems that
//! appear in the compact L-BFGS solve and the simplex QP.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Row-major square matrix, only used at m×m scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SmallMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], v)).collect()
    }
}

/// The smallest pivot magnitude accepted after equilibration.
pub const PIVOT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("pivot {pivot:e} below floor at elimination step {step}")]
pub struct SingularPivot {
    pub step: usize,
    pub pivot: f64,
}

/// Solves `a z = b` for a symmetric (possibly indefinite) matrix.
///
/// The matrix is first equilibrated symmetrically by the square roots of its
/// row maxima, then eliminated with complete pivoting. A pivot of magnitude
/// below [`PIVOT_FLOOR`] in the equilibrated matrix is reported as singular.
pub fn solve_symmetric(a: &SmallMatrix, b: &[f64]) -> Result<Vec<f64>, SingularPivot> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut scale = vec![0.0; n];
    for i in 0..n {
        let row_max = (0..n).fold(0.0_f64, |m, j| m.max(a.get(i, j).abs()));
        if row_max == 0.0 || !row_max.is_finite() {
            return Err(SingularPivot { step: 0, pivot: 0.0 });
        }
        scale[i] = 1.0 / row_max.sqrt();
    }
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = scale[i] * a.get(i, j) * scale[j];
        }
    }
    let mut rhs: Vec<f64> = (0..n).map(|i| scale[i] * b[i]).collect();
    // col_perm[k] = original column stored at position k
    let mut col_perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for i in k..n {
            for j in k..n {
                let v = m[i * n + j].abs();
                if v > best {
                    best = v;
                    pr = i;
                    pc = j;
                }
            }
        }
        if !(best >= PIVOT_FLOOR) {
            return Err(SingularPivot { step: k, pivot: best });
        }
        if pr != k {
            for j in 0..n {
                m.swap(k * n + j, pr * n + j);
            }
            rhs.swap(k, pr);
        }
        if pc != k {
            for i in 0..n {
                m.swap(i * n + k, i * n + pc);
            }
            col_perm.swap(k, pc);
        }
        let piv = m[k * n + k];
        for i in (k + 1)..n {
            let factor = m[i * n + k] / piv;
            if factor == 0.0 {
                continue;
            }
            m[i * n + k] = 0.0;
            for j in (k + 1)..n {
                m[i * n + j] -= factor * m[k * n + j];
            }
            rhs[i] -= factor * rhs[k];
        }
    }

    let mut w = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for j in (k + 1)..n {
            acc -= m[k * n + j] * w[j];
        }
        w[k] = acc / m[k * n + k];
    }
    let mut z = vec![0.0; n];
    for k in 0..n {
        z[col_perm[k]] = w[k] * scale[col_perm[k]];
    }
    Ok(z)
}

/// Solves `a z = b` for a symmetric positive definite matrix by Cholesky
/// factorization. A pivot that is not positive relative to the diagonal
/// scale is reported as singular.
pub fn cholesky_solve(a: &SmallMatrix, b: &[f64]) -> Result<Vec<f64>, SingularPivot> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let diag_max = (0..n).fold(0.0_f64, |m, i| m.max(a.get(i, i).abs()));
    let floor = diag_max * f64::EPSILON;
    // lower triangle of the factor, row-major
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > floor) {
            return Err(SingularPivot { step: j, pivot: d });
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / d;
        }
    }
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[i * n + k] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            z[i] -= l[k * n + i] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_indefinite_system() {
        // [[-2, 1], [1, 0]] is indefinite with a zero diagonal entry.
        let mut a = SmallMatrix::zeros(2);
        a.set(0, 0, -2.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        let z = solve_symmetric(&a, &[1.0, 3.0]).unwrap();
        let back = a.mul_vec(&z);
        assert!((back[0] - 1.0).abs() < 1e-14 && (back[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn badly_scaled_blocks() {
        let mut a = SmallMatrix::zeros(3);
        let vals = [[1e16, 1e4, 0.0], [1e4, -1e-8, 2e-9], [0.0, 2e-9, 1e-20]];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, vals[i][j]);
            }
        }
        let x = [1e-8, 3.0, -7e9];
        let b = a.mul_vec(&x);
        let z = solve_symmetric(&a, &b).unwrap();
        for i in 0..3 {
            assert!((z[i] - x[i]).abs() <= 1e-8 * x[i].abs(), "{z:?}");
        }
    }

    #[test]
    fn cholesky_spd() {
        let mut a = SmallMatrix::zeros(3);
        let vals = [[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, vals[i][j]);
            }
        }
        let x = [1.0, -2.0, 0.5];
        let z = cholesky_solve(&a, &a.mul_vec(&x)).unwrap();
        for i in 0..3 {
            assert!((z[i] - x[i]).abs() < 1e-14);
        }
        a.set(2, 2, -1.0);
        assert!(cholesky_solve(&a, &x).is_err());
    }

    #[test]
    fn singular_is_reported() {
        let mut a = SmallMatrix::zeros(2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 1.0);
        assert!(solve_symmetric(&a, &[1.0, 1.0]).is_err());
        assert!(solve_symmetric(&SmallMatrix::zeros(2), &[0.0, 0.0]).is_err());
    }
}
