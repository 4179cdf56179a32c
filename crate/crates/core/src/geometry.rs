//! Box-constraint primitives: projection, the instantaneous projection of a
//! direction, binding sets and the first-order stationarity residual.
//!
//! A coordinate is *tight* when it is bit-for-bit equal to one of its bounds.
//! The solver only creates tight coordinates through [`project`], which writes
//! the bound value itself, so exact comparison is the intended test.

use std::fmt;

/// Which bound a tight coordinate sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Per-coordinate lower and upper limits. Infinite limits are IEEE infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundsError {
    #[error("lower and upper bounds have different lengths ({lower} vs {upper})")]
    LengthMismatch { lower: usize, upper: usize },
    #[error("bounds must have at least one coordinate")]
    Empty,
    #[error("coordinate {index}: lower bound {lower} exceeds upper bound {upper}")]
    Infeasible { index: usize, lower: f64, upper: f64 },
    #[error("coordinate {index}: bound is NaN")]
    NotANumber { index: usize },
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, BoundsError> {
        if lower.len() != upper.len() {
            return Err(BoundsError::LengthMismatch { lower: lower.len(), upper: upper.len() });
        }
        if lower.is_empty() {
            return Err(BoundsError::Empty);
        }
        for (index, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(BoundsError::NotANumber { index });
            }
            if l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(BoundsError::Infeasible { index, lower: l, upper: u });
            }
        }
        Ok(Self { lower, upper })
    }

    /// No finite limits in any coordinate.
    pub fn unbounded(n: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]).expect("unbounded box is always valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Which bound coordinate `i` of `x` is tight at, if any.
    ///
    /// When `l_i == u_i` the coordinate is reported as tight at the lower bound.
    #[inline]
    pub fn tight_side(&self, x: &[f64], i: usize) -> Option<BoundSide> {
        if x[i] == self.lower[i] {
            Some(BoundSide::Lower)
        } else if x[i] == self.upper[i] {
            Some(BoundSide::Upper)
        } else {
            None
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&xi, (&l, &u))| l <= xi && xi <= u)
    }

    /// Midpoint of each coordinate interval. Half-infinite intervals use the
    /// finite end, fully infinite ones use zero.
    pub fn midpoint(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| match (l.is_finite(), u.is_finite()) {
                (true, true) => 0.5 * l + 0.5 * u,
                (true, false) => l,
                (false, true) => u,
                (false, false) => 0.0,
            })
            .collect()
    }

    /// Number of coordinates of `x` sitting exactly on a bound (the set F̄).
    pub fn tight_count(&self, x: &[f64]) -> usize {
        (0..self.dim()).filter(|&i| self.tight_side(x, i).is_some()).count()
    }

    fn check_len(&self, v: &[f64], what: &str) {
        assert_eq!(v.len(), self.dim(), "{what} has length {} but bounds have dimension {}", v.len(), self.dim());
    }
}

/// A set of coordinate indices, each tagged with the bound it is fixed at.
#[derive(Clone, PartialEq, Eq)]
pub struct ActiveSet {
    tags: Vec<Option<BoundSide>>,
    len: usize,
}

impl ActiveSet {
    pub fn empty(n: usize) -> Self {
        Self { tags: vec![None; n], len: 0 }
    }

    pub fn dim(&self) -> usize {
        self.tags.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.tags[i].is_some()
    }

    pub fn side(&self, i: usize) -> Option<BoundSide> {
        self.tags[i]
    }

    /// Returns `true` if `i` was not already a member.
    pub fn insert(&mut self, i: usize, side: BoundSide) -> bool {
        let fresh = self.tags[i].is_none();
        if fresh {
            self.len += 1;
        }
        self.tags[i] = Some(side);
        fresh
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, BoundSide)> + '_ {
        self.tags.iter().enumerate().filter_map(|(i, t)| t.map(|s| (i, s)))
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().map(|(i, _)| i).collect()
    }

    /// Indices not in the set, in increasing order.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.contains(i)).collect()
    }

    pub fn union(&self, other: &ActiveSet) -> ActiveSet {
        assert_eq!(self.dim(), other.dim());
        let mut out = self.clone();
        for (i, side) in other.iter() {
            if !out.contains(i) {
                out.insert(i, side);
            }
        }
        out
    }

    pub fn is_subset(&self, other: &ActiveSet) -> bool {
        self.iter().all(|(i, _)| other.contains(i))
    }
}

impl fmt::Debug for ActiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.iter().map(|(i, s)| match s {
                BoundSide::Lower => format!("{i}L"),
                BoundSide::Upper => format!("{i}U"),
            }))
            .finish()
    }
}

/// Componentwise clamp of `x` onto the box. Writes bound values exactly.
pub fn project(x: &[f64], b: &Bounds) -> Vec<f64> {
    b.check_len(x, "x");
    x.iter()
        .zip(b.lower.iter().zip(&b.upper))
        .map(|(&xi, (&l, &u))| {
            if xi <= l {
                l
            } else if xi >= u {
                u
            } else {
                xi
            }
        })
        .collect()
}

/// Instantaneous projection of direction `p` at feasible `x`: components that
/// would immediately leave the box are zeroed.
pub fn t_operator(x: &[f64], p: &[f64], b: &Bounds) -> Vec<f64> {
    b.check_len(x, "x");
    b.check_len(p, "p");
    debug_assert!(b.contains(x), "t_operator requires a feasible point");
    (0..x.len())
        .map(|i| match b.tight_side(x, i) {
            None => p[i],
            Some(BoundSide::Lower) => p[i].max(0.0),
            Some(BoundSide::Upper) => p[i].min(0.0),
        })
        .collect()
}

/// Tight coordinates whose gradient component predicts no decrease from moving
/// into the interior: `x_i = l_i, g_i >= 0` or `x_i = u_i, g_i <= 0`.
pub fn binding_set(x: &[f64], g: &[f64], b: &Bounds) -> ActiveSet {
    b.check_len(x, "x");
    b.check_len(g, "g");
    let mut set = ActiveSet::empty(x.len());
    for i in 0..x.len() {
        match b.tight_side(x, i) {
            Some(BoundSide::Lower) if g[i] >= 0.0 => {
                set.insert(i, BoundSide::Lower);
            }
            Some(BoundSide::Upper) if g[i] <= 0.0 => {
                set.insert(i, BoundSide::Upper);
            }
            _ => {}
        }
    }
    set
}

/// `T(x, -g)`. Zero exactly when `x` satisfies the first-order conditions of
/// the box-constrained problem.
pub fn stationarity_residual(x: &[f64], g: &[f64], b: &Bounds) -> Vec<f64> {
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    t_operator(x, &neg, b)
}
