//! Nonsmooth bound-constrained test problems.
//!
//! Each registered problem has a closed-form unconstrained minimizer `x*`.
//! Bounds are placed so that `x*` is infeasible: coordinates with an even
//! 1-based index are confined to `[x*_i − 5.5, x*_i − 0.5]`, the rest to
//! `[−100, 100]`. Starting points are the box midpoint plus a `U(−2, 2)`
//! perturbation, projected back into the box.

mod fdcheck;
mod functions;

use std::fmt;
use std::str::FromStr;

use nqn_core::{project, Bounds, Objective};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use fdcheck::{fd_check, fd_check_random, fd_step, FdSummary, KinkDetected};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProblemError {
    #[error("unknown problem {name:?}; valid names: {}", valid_names().join(", "))]
    Unknown { name: String },
    #[error("{name} requires an even dimension, got n = {n}")]
    OddDimension { name: &'static str, n: usize },
    #[error("{name} requires n ≥ 2, got n = {n}")]
    TooSmall { name: &'static str, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProblemKind {
    MyopicDecoupled,
    MyopicCoupled,
    Nesterov3,
    L1,
    L2,
    Maxq,
    Maxhilb,
    L1hilb,
    ChainedLq,
    ChainedCb3_1,
    NonsmoothBrown,
    ActiveFaces,
}

/// Human-readable catalog entry.
#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub kind: ProblemKind,
    pub formula: &'static str,
    pub minimizer: &'static str,
    pub source: &'static str,
}

const CATALOG: [CatalogEntry; 12] = [
    CatalogEntry {
        kind: ProblemKind::MyopicDecoupled,
        formula: "sum_{i odd} |x_i - x_{i+1}| + (x_i + 0.1 x_{i+1})^2, n even",
        minimizer: "0",
        source: "generalization of a two-variable myopic example",
    },
    CatalogEntry {
        kind: ProblemKind::MyopicCoupled,
        formula: "sum_{i=1}^{n-1} |x_i - x_{i+1}| + (x_i + 0.1 x_{i+1})^2, n even",
        minimizer: "0",
        source: "generalization of a two-variable myopic example",
    },
    CatalogEntry {
        kind: ProblemKind::Nesterov3,
        formula: "max{ |x_1|, max_{i>=2} |x_{i-1} - x_i| }",
        minimizer: "0",
        source: "Overton (private communication)",
    },
    CatalogEntry { kind: ProblemKind::L1, formula: "sum_i |x_i|", minimizer: "0", source: "Skajaa (2010)" },
    CatalogEntry { kind: ProblemKind::L2, formula: "||x||_2", minimizer: "0", source: "Lewis and Overton (2013)" },
    CatalogEntry {
        kind: ProblemKind::Maxq,
        formula: "max_i x_i^2",
        minimizer: "0",
        source: "Haarala, Miettinen and Makela (2004)",
    },
    CatalogEntry {
        kind: ProblemKind::Maxhilb,
        formula: "max_i | sum_j x_j / (i + j - 1) |",
        minimizer: "0",
        source: "Haarala, Miettinen and Makela (2004)",
    },
    CatalogEntry {
        kind: ProblemKind::L1hilb,
        formula: "sum_i | sum_j x_j / (i + j - 1) |",
        minimizer: "0",
        source: "Haarala, Miettinen and Makela (2004)",
    },
    CatalogEntry {
        kind: ProblemKind::ChainedLq,
        formula: "sum_{i=1}^{n-1} max{ -x_i - x_{i+1}, -x_i - x_{i+1} + x_i^2 + x_{i+1}^2 - 1 }",
        minimizer: "1/sqrt(2)",
        source: "Haarala, Miettinen and Makela (2004)",
    },
    CatalogEntry {
        kind: ProblemKind::ChainedCb3_1,
        formula: "sum_{i=1}^{n-1} max{ x_i^4 + x_{i+1}^2, (2 - x_i)^2 + (2 - x_{i+1})^2, 2 exp(x_{i+1} - x_i) }",
        minimizer: "1",
        source: "Haarala, Miettinen and Makela (2004)",
    },
    CatalogEntry {
        kind: ProblemKind::NonsmoothBrown,
        formula: "sum_{i=1}^{n-1} |x_i|^(x_{i+1}^2 + 1) + |x_{i+1}|^(x_i^2 + 1)",
        minimizer: "0",
        source: "Haarala, Miettinen and Makela (2004)",
    },
    CatalogEntry {
        kind: ProblemKind::ActiveFaces,
        formula: "max{ ln(|sum_i x_i| + 1), max_i ln(|x_i| + 1) }",
        minimizer: "0",
        source: "Haarala, Miettinen and Makela (2004)",
    },
];

impl ProblemKind {
    pub const ALL: [ProblemKind; 12] = [
        ProblemKind::MyopicDecoupled,
        ProblemKind::MyopicCoupled,
        ProblemKind::Nesterov3,
        ProblemKind::L1,
        ProblemKind::L2,
        ProblemKind::Maxq,
        ProblemKind::Maxhilb,
        ProblemKind::L1hilb,
        ProblemKind::ChainedLq,
        ProblemKind::ChainedCb3_1,
        ProblemKind::NonsmoothBrown,
        ProblemKind::ActiveFaces,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::MyopicDecoupled => "Myopic_Decoupled",
            ProblemKind::MyopicCoupled => "Myopic_Coupled",
            ProblemKind::Nesterov3 => "Nesterov_3",
            ProblemKind::L1 => "L1",
            ProblemKind::L2 => "L2",
            ProblemKind::Maxq => "MAXQ",
            ProblemKind::Maxhilb => "MAXHILB",
            ProblemKind::L1hilb => "L1HILB",
            ProblemKind::ChainedLq => "Chained_LQ",
            ProblemKind::ChainedCb3_1 => "Chained_CB3_1",
            ProblemKind::NonsmoothBrown => "Nonsmooth_Brown",
            ProblemKind::ActiveFaces => "Active_Faces",
        }
    }

    pub fn catalog(self) -> &'static CatalogEntry {
        CATALOG.iter().find(|e| e.kind == self).expect("every kind is catalogued")
    }

    pub fn requires_even(self) -> bool {
        matches!(self, ProblemKind::MyopicDecoupled | ProblemKind::MyopicCoupled)
    }

    /// Value of every coordinate of the unconstrained minimizer.
    pub fn minimizer_value(self) -> f64 {
        match self {
            ProblemKind::ChainedLq => std::f64::consts::FRAC_1_SQRT_2,
            ProblemKind::ChainedCb3_1 => 1.0,
            _ => 0.0,
        }
    }

    /// Known optimal value over the constructed box, where one is available
    /// in closed form (`n` even).
    pub fn constrained_optimum(self, n: usize) -> Option<f64> {
        if !n.is_multiple_of(2) {
            return None;
        }
        let half = (n / 2) as f64;
        match self {
            ProblemKind::MyopicDecoupled => Some(0.3 * half),
            ProblemKind::L1 => Some(0.5 * half),
            ProblemKind::L2 => Some(0.5 * half.sqrt()),
            ProblemKind::Maxq => Some(0.25),
            ProblemKind::Nesterov3 => Some(0.25),
            ProblemKind::ActiveFaces => Some(1.5f64.ln()),
            _ => None,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim();
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(key))
            .ok_or_else(|| ProblemError::Unknown { name: key.to_string() })
    }
}

pub fn valid_names() -> Vec<&'static str> {
    ProblemKind::ALL.iter().map(|k| k.name()).collect()
}

/// A registered problem at a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    kind: ProblemKind,
    n: usize,
}

impl Problem {
    pub fn new(kind: ProblemKind, n: usize) -> Result<Self, ProblemError> {
        if n < 2 {
            return Err(ProblemError::TooSmall { name: kind.name(), n });
        }
        if kind.requires_even() && !n.is_multiple_of(2) {
            return Err(ProblemError::OddDimension { name: kind.name(), n });
        }
        Ok(Self { kind, n })
    }

    pub fn by_name(name: &str, n: usize) -> Result<Self, ProblemError> {
        Self::new(name.parse()?, n)
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn x_star_uncon(&self) -> Vec<f64> {
        vec![self.kind.minimizer_value(); self.n]
    }

    pub fn bounds(&self) -> Bounds {
        make_bounds(&self.x_star_uncon())
    }

    pub fn f_star_hint(&self) -> Option<f64> {
        self.kind.constrained_optimum(self.n)
    }

    /// Identifies the smooth piece selected at `x`; equal signatures mean
    /// the same gradient formula applies.
    pub fn signature(&self, x: &[f64]) -> Vec<i64> {
        use functions::*;
        match self.kind {
            ProblemKind::MyopicDecoupled => myopic_signature(x, 2),
            ProblemKind::MyopicCoupled => myopic_signature(x, 1),
            ProblemKind::Nesterov3 => nesterov3_signature(x),
            ProblemKind::L1 => l1_signature(x),
            ProblemKind::L2 => l2_signature(x),
            ProblemKind::Maxq => maxq_signature(x),
            ProblemKind::Maxhilb => maxhilb_signature(x),
            ProblemKind::L1hilb => l1hilb_signature(x),
            ProblemKind::ChainedLq => chained_lq_signature(x),
            ProblemKind::ChainedCb3_1 => chained_cb3_1_signature(x),
            ProblemKind::NonsmoothBrown => nonsmooth_brown_signature(x),
            ProblemKind::ActiveFaces => active_faces_signature(x),
        }
    }
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(x.len(), self.n, "{}: point has wrong dimension", self.name());
        use functions::*;
        match self.kind {
            ProblemKind::MyopicDecoupled => myopic_decoupled(x),
            ProblemKind::MyopicCoupled => myopic_coupled(x),
            ProblemKind::Nesterov3 => nesterov3(x),
            ProblemKind::L1 => l1(x),
            ProblemKind::L2 => l2(x),
            ProblemKind::Maxq => maxq(x),
            ProblemKind::Maxhilb => maxhilb(x),
            ProblemKind::L1hilb => l1hilb(x),
            ProblemKind::ChainedLq => chained_lq(x),
            ProblemKind::ChainedCb3_1 => chained_cb3_1(x),
            ProblemKind::NonsmoothBrown => nonsmooth_brown(x),
            ProblemKind::ActiveFaces => active_faces(x),
        }
    }
}

/// The two-variable myopic example `|x₁ − x₂| + ½(x₁ + 0.1x₂)²` with
/// `x₁ ≤ −0.5`. Not part of the registry.
#[derive(Debug, Clone, Copy, Default)]
pub struct Myopic2d;

impl Myopic2d {
    pub fn bounds(&self) -> Bounds {
        Bounds::new(vec![f64::NEG_INFINITY; 2], vec![-0.5, f64::INFINITY]).expect("valid box")
    }

    pub fn solution(&self) -> [f64; 2] {
        [-0.5, -0.5]
    }
}

impl Objective for Myopic2d {
    fn dim(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = x[0] - x[1];
        let q = x[0] + 0.1 * x[1];
        let s = functions::sgn(d);
        (d.abs() + 0.5 * q * q, vec![s + q, -s + 0.1 * q])
    }
}

/// Box with `[x*_i − 5.5, x*_i − 0.5]` on even 1-based indices and
/// `[−100, 100]` elsewhere.
pub fn make_bounds(x_star: &[f64]) -> Bounds {
    let n = x_star.len();
    let mut lower = vec![-100.0; n];
    let mut upper = vec![100.0; n];
    // 0-based i is even 1-based when i is odd
    for i in (1..n).step_by(2) {
        lower[i] = x_star[i] - 5.5;
        upper[i] = x_star[i] - 0.5;
    }
    Bounds::new(lower, upper).expect("constructed box is feasible")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StartSpec {
    pub seed: u64,
    pub count: usize,
}

impl StartSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed, count: 10 }
    }
}

/// `count` starts, the `k`-th drawn from ChaCha8 seeded with `seed` on
/// stream `k`, so each start is independent of how many are requested.
pub fn make_starts(b: &Bounds, spec: StartSpec) -> Vec<Vec<f64>> {
    let mid = b.midpoint();
    (0..spec.count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(k as u64);
            let x: Vec<f64> = mid.iter().map(|m| m + rng.gen_range(-2.0..2.0)).collect();
            project(&x, b)
        })
        .collect()
}

/// The start used for a single run with the given seed.
pub fn start_for_seed(b: &Bounds, seed: u64) -> Vec<f64> {
    make_starts(b, StartSpec { seed, count: 1 }).remove(0)
}
