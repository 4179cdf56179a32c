//! Objective formulas, analytic gradients and smooth-piece signatures.
//!
//! Kinks are resolved with `sign(0) = +1`, and max-type terms pick the
//! lowest attaining index. The signature of a point identifies the smooth
//! piece whose gradient is returned there.

/// `+1` for `t ≥ 0`, `−1` otherwise.
#[inline]
pub(crate) fn sgn(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn sig(t: f64) -> i64 {
    i64::from(t >= 0.0)
}

/// Index of the first maximal entry.
fn argmax(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// `|a − b| + (a + 0.1b)²` and its partials.
#[inline]
fn myopic_term(a: f64, b: f64) -> (f64, f64, f64) {
    let d = a - b;
    let q = a + 0.1 * b;
    let s = sgn(d);
    (d.abs() + q * q, s + 2.0 * q, -s + 0.2 * q)
}

pub(crate) fn myopic_decoupled(x: &[f64]) -> (f64, Vec<f64>) {
    let mut f = 0.0;
    let mut g = vec![0.0; x.len()];
    for i in (0..x.len()).step_by(2) {
        let (v, ga, gb) = myopic_term(x[i], x[i + 1]);
        f += v;
        g[i] += ga;
        g[i + 1] += gb;
    }
    (f, g)
}

pub(crate) fn myopic_coupled(x: &[f64]) -> (f64, Vec<f64>) {
    let mut f = 0.0;
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() - 1 {
        let (v, ga, gb) = myopic_term(x[i], x[i + 1]);
        f += v;
        g[i] += ga;
        g[i + 1] += gb;
    }
    (f, g)
}

pub(crate) fn myopic_signature(x: &[f64], step: usize) -> Vec<i64> {
    (0..x.len() - 1).step_by(step).map(|i| sig(x[i] - x[i + 1])).collect()
}

/// `max{|x₁|, |x_{i−1} − x_i| for i ≥ 2}`; piece 0 is `|x₁|`.
fn nesterov3_pieces(x: &[f64]) -> impl Iterator<Item = f64> + '_ {
    std::iter::once(x[0]).chain(x.windows(2).map(|w| w[0] - w[1]))
}

pub(crate) fn nesterov3(x: &[f64]) -> (f64, Vec<f64>) {
    let (k, f) = argmax(nesterov3_pieces(x).map(f64::abs));
    let mut g = vec![0.0; x.len()];
    if k == 0 {
        g[0] = sgn(x[0]);
    } else {
        let s = sgn(x[k - 1] - x[k]);
        g[k - 1] = s;
        g[k] = -s;
    }
    (f, g)
}

pub(crate) fn nesterov3_signature(x: &[f64]) -> Vec<i64> {
    let (k, _) = argmax(nesterov3_pieces(x).map(f64::abs));
    let inner = nesterov3_pieces(x).nth(k).unwrap_or(0.0);
    vec![k as i64, sig(inner)]
}

pub(crate) fn l1(x: &[f64]) -> (f64, Vec<f64>) {
    (x.iter().map(|v| v.abs()).sum(), x.iter().map(|&v| sgn(v)).collect())
}

pub(crate) fn l1_signature(x: &[f64]) -> Vec<i64> {
    x.iter().map(|&v| sig(v)).collect()
}

pub(crate) fn l2(x: &[f64]) -> (f64, Vec<f64>) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (0.0, vec![0.0; x.len()]);
    }
    (norm, x.iter().map(|v| v / norm).collect())
}

pub(crate) fn l2_signature(x: &[f64]) -> Vec<i64> {
    vec![i64::from(x.iter().all(|&v| v == 0.0))]
}

pub(crate) fn maxq(x: &[f64]) -> (f64, Vec<f64>) {
    let (k, f) = argmax(x.iter().map(|v| v * v));
    let mut g = vec![0.0; x.len()];
    g[k] = 2.0 * x[k];
    (f, g)
}

pub(crate) fn maxq_signature(x: &[f64]) -> Vec<i64> {
    vec![argmax(x.iter().map(|v| v * v)).0 as i64]
}

/// `h_i = Σ_j x_j / (i + j + 1)` with 0-based indices.
fn hilbert_apply(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|j| x[j] / (i + j + 1) as f64).sum()).collect()
}

pub(crate) fn maxhilb(x: &[f64]) -> (f64, Vec<f64>) {
    let n = x.len();
    let h = hilbert_apply(x);
    let (k, f) = argmax(h.iter().map(|v| v.abs()));
    let s = sgn(h[k]);
    (f, (0..n).map(|j| s / (k + j + 1) as f64).collect())
}

pub(crate) fn maxhilb_signature(x: &[f64]) -> Vec<i64> {
    let h = hilbert_apply(x);
    let (k, _) = argmax(h.iter().map(|v| v.abs()));
    vec![k as i64, sig(h[k])]
}

pub(crate) fn l1hilb(x: &[f64]) -> (f64, Vec<f64>) {
    let h = hilbert_apply(x);
    let f = h.iter().map(|v| v.abs()).sum();
    let signs: Vec<f64> = h.iter().map(|&v| sgn(v)).collect();
    // the Hilbert matrix is symmetric
    (f, hilbert_apply(&signs))
}

pub(crate) fn l1hilb_signature(x: &[f64]) -> Vec<i64> {
    hilbert_apply(x).into_iter().map(sig).collect()
}

/// Piece selection for `max{−a−b, −a−b + a² + b² − 1}`.
#[inline]
fn lq_second(a: f64, b: f64) -> bool {
    a * a + b * b - 1.0 > 0.0
}

pub(crate) fn chained_lq(x: &[f64]) -> (f64, Vec<f64>) {
    let mut f = 0.0;
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() - 1 {
        let (a, b) = (x[i], x[i + 1]);
        let base = -a - b;
        if lq_second(a, b) {
            f += base + a * a + b * b - 1.0;
            g[i] += -1.0 + 2.0 * a;
            g[i + 1] += -1.0 + 2.0 * b;
        } else {
            f += base;
            g[i] -= 1.0;
            g[i + 1] -= 1.0;
        }
    }
    (f, g)
}

pub(crate) fn chained_lq_signature(x: &[f64]) -> Vec<i64> {
    x.windows(2).map(|w| i64::from(lq_second(w[0], w[1]))).collect()
}

fn cb3_pieces(a: f64, b: f64) -> [f64; 3] {
    [a.powi(4) + b * b, (2.0 - a).powi(2) + (2.0 - b).powi(2), 2.0 * (b - a).exp()]
}

pub(crate) fn chained_cb3_1(x: &[f64]) -> (f64, Vec<f64>) {
    let mut f = 0.0;
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() - 1 {
        let (a, b) = (x[i], x[i + 1]);
        let (k, v) = argmax(cb3_pieces(a, b));
        f += v;
        let (ga, gb) = match k {
            0 => (4.0 * a.powi(3), 2.0 * b),
            1 => (-2.0 * (2.0 - a), -2.0 * (2.0 - b)),
            _ => {
                let e = 2.0 * (b - a).exp();
                (-e, e)
            }
        };
        g[i] += ga;
        g[i + 1] += gb;
    }
    (f, g)
}

pub(crate) fn chained_cb3_1_signature(x: &[f64]) -> Vec<i64> {
    x.windows(2).map(|w| argmax(cb3_pieces(w[0], w[1])).0 as i64).collect()
}

/// `|a|^(b²+1)` and its partials; the `b`-partial vanishes at `a = 0`.
#[inline]
fn brown_term(a: f64, b: f64) -> (f64, f64, f64) {
    let u = a.abs();
    let e = b * b + 1.0;
    if u == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let v = u.powf(e);
    (v, e * u.powf(e - 1.0) * sgn(a), v * u.ln() * 2.0 * b)
}

pub(crate) fn nonsmooth_brown(x: &[f64]) -> (f64, Vec<f64>) {
    let mut f = 0.0;
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() - 1 {
        let (a, b) = (x[i], x[i + 1]);
        let (v1, d1a, d1b) = brown_term(a, b);
        let (v2, d2b, d2a) = brown_term(b, a);
        f += v1 + v2;
        g[i] += d1a + d2a;
        g[i + 1] += d1b + d2b;
    }
    (f, g)
}

pub(crate) fn nonsmooth_brown_signature(x: &[f64]) -> Vec<i64> {
    l1_signature(x)
}

/// Piece 0 is `ln(|Σx| + 1)`, piece `i + 1` is `ln(|x_i| + 1)`.
fn active_faces_inner(x: &[f64]) -> impl Iterator<Item = f64> + '_ {
    std::iter::once(x.iter().sum::<f64>()).chain(x.iter().copied())
}

pub(crate) fn active_faces(x: &[f64]) -> (f64, Vec<f64>) {
    let (k, m) = argmax(active_faces_inner(x).map(f64::abs));
    let inner = active_faces_inner(x).nth(k).unwrap_or(0.0);
    let d = sgn(inner) / (m + 1.0);
    let g = if k == 0 {
        vec![d; x.len()]
    } else {
        let mut g = vec![0.0; x.len()];
        g[k - 1] = d;
        g
    };
    (m.ln_1p(), g)
}

pub(crate) fn active_faces_signature(x: &[f64]) -> Vec<i64> {
    let (k, _) = argmax(active_faces_inner(x).map(f64::abs));
    let inner = active_faces_inner(x).nth(k).unwrap_or(0.0);
    vec![k as i64, sig(inner)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_index_wins_ties() {
        assert_eq!(argmax([1.0, 3.0, 3.0]), (1, 3.0));
        let (f, g) = maxq(&[-2.0, 2.0]);
        assert_eq!(f, 4.0);
        assert_eq!(g, vec![-4.0, 0.0]);
    }

    #[test]
    fn sign_of_zero_is_positive() {
        assert_eq!(l1(&[0.0, -1.0]).1, vec![1.0, -1.0]);
    }

    #[test]
    fn nesterov_example() {
        let (f, g) = nesterov3(&[3.0, 3.0, 3.0]);
        assert_eq!(f, 3.0);
        assert_eq!(g, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn l1_example() {
        let (f, g) = l1(&[1.0, -2.0]);
        assert_eq!(f, 3.0);
        assert_eq!(g, vec![1.0, -1.0]);
    }

    #[test]
    fn chained_minimizers() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let (f, _) = chained_lq(&[r, r, r]);
        assert!((f + 2.0 * std::f64::consts::SQRT_2).abs() < 1e-14);
        let (f, _) = chained_cb3_1(&[1.0; 4]);
        assert_eq!(f, 6.0);
    }

    #[test]
    fn zero_is_the_minimizer_of_nonnegative_problems() {
        let z = [0.0; 6];
        for (f, _) in [
            myopic_decoupled(&z),
            myopic_coupled(&z),
            nesterov3(&z),
            l1(&z),
            l2(&z),
            maxq(&z),
            maxhilb(&z),
            l1hilb(&z),
            nonsmooth_brown(&z),
            active_faces(&z),
        ] {
            assert_eq!(f, 0.0);
        }
    }
}
