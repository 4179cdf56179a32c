//! Outer iteration of the bound-constrained nonsmooth quasi-Newton method.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::correction::correct;
use crate::geometry::{binding_set, project, stationarity_residual, ActiveSet, Bounds};
use crate::lbfgs::{theta_init, CurvaturePair, LbfgsMemory, NumericalBreakdown, UpdateOutcome};
use crate::linalg::norm_inf;
use crate::line_search::{modified_wolfe, LineSearchConfig, LineSearchOutcome, LineSearchStatus};
use crate::subgrad::{min_norm_combination, predict_active_set, GradientHistory};

/// A function with a gradient oracle. Calls must be deterministic.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    /// Returns `(f(x), ∇f(x))`; at kinks any one-sided piece gradient.
    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>);
}

/// Adapts a closure to [`Objective`].
pub struct FnObjective<F> {
    n: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.f)(x)
    }
}

/// Active-set selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    /// Binding set of the gradient.
    V1,
    /// Union with the binding set of the min-norm subgradient.
    V2,
    /// Binding set of the gradient, then correction.
    V3,
    /// Prediction, then correction.
    V4,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::V1, Variant::V2, Variant::V3, Variant::V4];

    pub fn uses_prediction(self) -> bool {
        matches!(self, Variant::V2 | Variant::V4)
    }

    pub fn uses_correction(self) -> bool {
        matches!(self, Variant::V3 | Variant::V4)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::V1 => "V1",
            Variant::V2 => "V2",
            Variant::V3 => "V3",
            Variant::V4 => "V4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown variant {0:?}, expected one of V1, V2, V3, V4")]
pub struct ParseVariantError(pub String);

impl FromStr for Variant {
    type Err = ParseVariantError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "V1" | "1" => Ok(Variant::V1),
            "V2" | "2" => Ok(Variant::V2),
            "V3" | "3" => Ok(Variant::V3),
            "V4" | "4" => Ok(Variant::V4),
            _ => Err(ParseVariantError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("memory size m must be at least 1")]
    ZeroMemory,
    #[error("gradient history size must be at least 1")]
    ZeroHistory,
    #[error("gradient evaluation budget must be at least 1")]
    ZeroBudget,
    #[error("eps_skip must be finite and nonnegative, got {0}")]
    BadSkip(f64),
    #[error("stationarity tolerance must be finite and nonnegative, got {0}")]
    BadTolerance(f64),
    #[error("line search: {0}")]
    LineSearch(String),
    #[error("start has length {got}, problem dimension is {expected}")]
    StartLength { expected: usize, got: usize },
    #[error("bounds have dimension {got}, problem dimension is {expected}")]
    BoundsLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Curvature pairs kept in the L-BFGS model.
    pub memory: usize,
    /// Gradients kept for the min-norm subgradient.
    pub history: usize,
    pub line_search: LineSearchConfig,
    pub eps_skip: f64,
    /// Gradient evaluation budget; `None` means `100 n`.
    pub budget: Option<usize>,
    pub stationarity_tol: f64,
    /// Keep the initial and final active set of every iteration.
    pub record_active_sets: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            variant: Variant::V3,
            memory: 20,
            history: 20,
            line_search: LineSearchConfig::default(),
            eps_skip: 1e-8,
            budget: None,
            stationarity_tol: 0.0,
            record_active_sets: false,
        }
    }
}

impl SolverConfig {
    pub fn with_variant(variant: Variant) -> Self {
        Self { variant, ..Self::default() }
    }

    pub fn budget_for(&self, n: usize) -> usize {
        self.budget.unwrap_or(100 * n)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.memory == 0 {
            return Err(ConfigError::ZeroMemory);
        }
        if self.history == 0 {
            return Err(ConfigError::ZeroHistory);
        }
        if self.budget == Some(0) {
            return Err(ConfigError::ZeroBudget);
        }
        if !(self.eps_skip >= 0.0 && self.eps_skip.is_finite()) {
            return Err(ConfigError::BadSkip(self.eps_skip));
        }
        if !(self.stationarity_tol >= 0.0 && self.stationarity_tol.is_finite()) {
            return Err(ConfigError::BadTolerance(self.stationarity_tol));
        }
        self.line_search.validate().map_err(ConfigError::LineSearch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Stationary,
    BudgetExhausted,
    NoDirection,
    LineSearchError,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Stationary => "stationary",
            Termination::BudgetExhausted => "budget",
            Termination::NoDirection => "no_direction",
            Termination::LineSearchError => "search_error",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One outer iteration, recorded whether or not its step was accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Objective at the iterate the step starts from.
    pub f: f64,
    /// Cumulative gradient evaluations after the line search.
    pub grad_evals: usize,
    pub tight_count: usize,
    pub a_init: usize,
    pub a_final: usize,
    pub alpha: f64,
    pub ls_status: LineSearchStatus,
    pub ls_trials: usize,
    /// Subspace solves in the correction loop; 0 without correction.
    pub correction_solves: usize,
    /// Correction rounds that added at least one index.
    pub correction_rounds: usize,
    /// The min-norm QP failed and the plain gradient was used.
    pub qp_fallback: bool,
    pub pair: Option<UpdateOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Objective at `x⁰` followed by every accepted iterate.
    pub f_history: Vec<f64>,
    /// Cumulative gradient evaluations at which each `f_history` entry was reached.
    pub eval_history: Vec<usize>,
    pub iterations: Vec<IterationRecord>,
    /// `(initial, final)` active sets per iteration when requested.
    pub active_sets: Option<Vec<(ActiveSet, ActiveSet)>>,
    pub grad_eval_count: usize,
    pub termination: Termination,
    pub qp_fallbacks: usize,
    pub skipped_pairs: usize,
    pub best_f: f64,
    pub best_x: Vec<f64>,
    pub wall_time: f64,
}

impl RunRecord {
    pub fn f0(&self) -> f64 {
        self.f_history[0]
    }

    /// Gradient evaluations at which `(f − f*)/(f⁰ − f*) < eps` first held.
    pub fn evals_to_reach(&self, f_star: f64, eps: f64) -> Option<usize> {
        let f0 = self.f0();
        if f0 <= f_star {
            return Some(self.eval_history[0]);
        }
        let denom = f0 - f_star;
        self.f_history.iter().zip(&self.eval_history).find(|(&f, _)| (f - f_star) / denom < eps).map(|(_, &e)| e)
    }

    /// Equality up to wall time.
    pub fn same_trajectory(&self, other: &RunRecord) -> bool {
        let strip = |r: &RunRecord| RunRecord { wall_time: 0.0, ..r.clone() };
        strip(self) == strip(other)
    }
}

/// Everything needed to re-check one line search after the fact.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub k: usize,
    pub x: &'a [f64],
    pub f: f64,
    pub g: &'a [f64],
    pub direction: &'a [f64],
    pub final_set: &'a ActiveSet,
    pub outcome: &'a LineSearchOutcome,
    pub record: &'a IterationRecord,
}

/// Initial active set for an iteration. The flag reports a min-norm QP
/// failure that downgraded a prediction to the binding set.
pub fn select_active_set(
    variant: Variant,
    x: &[f64],
    g: &[f64],
    history: &GradientHistory,
    b: &Bounds,
) -> (ActiveSet, bool) {
    if !variant.uses_prediction() {
        return (binding_set(x, g, b), false);
    }
    match min_norm_combination(history) {
        Ok(res) => (predict_active_set(x, g, &res.g_tilde, b), false),
        Err(_) => (binding_set(x, g, b), true),
    }
}

pub fn nqn_solve<O: Objective + ?Sized>(
    obj: &O,
    b: &Bounds,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<RunRecord, ConfigError> {
    nqn_solve_observed(obj, b, x0, cfg, |_| {})
}

/// Runs the method and hands every line search to `observer` before the
/// iterate is advanced. Starts outside the box are projected.
pub fn nqn_solve_observed<O, F>(
    obj: &O,
    b: &Bounds,
    x0: &[f64],
    cfg: &SolverConfig,
    mut observer: F,
) -> Result<RunRecord, ConfigError>
where
    O: Objective + ?Sized,
    F: FnMut(&StepEvent<'_>),
{
    cfg.validate()?;
    let n = obj.dim();
    if x0.len() != n {
        return Err(ConfigError::StartLength { expected: n, got: x0.len() });
    }
    if b.dim() != n {
        return Err(ConfigError::BoundsLength { expected: n, got: b.dim() });
    }
    let started = Instant::now();
    let budget = cfg.budget_for(n);

    let mut x = project(x0, b);
    let (mut f, mut g) = obj.evaluate(&x);
    let mut evals = 1;
    let mut mem = LbfgsMemory::new(n, cfg.memory);
    let mut history = GradientHistory::new(cfg.history);
    history.push(&x, &g);

    let mut f_history = vec![f];
    let mut eval_history = vec![evals];
    let mut iterations = Vec::new();
    let mut active_sets = cfg.record_active_sets.then(Vec::new);
    let mut qp_fallbacks = 0;

    let termination = loop {
        if norm_inf(&stationarity_residual(&x, &g, b)) <= cfg.stationarity_tol {
            break Termination::Stationary;
        }
        if evals >= budget {
            break Termination::BudgetExhausted;
        }
        let k = iterations.len();
        mem.set_theta(theta_init(&g));

        let (a_init, qp_fallback) = select_active_set(cfg.variant, &x, &g, &history, b);
        qp_fallbacks += usize::from(qp_fallback);
        let solved: Result<(ActiveSet, Vec<f64>, usize, usize), NumericalBreakdown> = if cfg.variant.uses_correction() {
            correct(&x, &g, b, &a_init, &mem).map(|c| (c.final_set, c.direction, c.loop_count, c.added_per_round.len()))
        } else {
            mem.subspace_solve(&g, &a_init).map(|r| (a_init.clone(), r.direction, 0, 0))
        };
        let Ok((a_final, p, correction_solves, correction_rounds)) = solved else {
            break Termination::NoDirection;
        };

        let outcome = modified_wolfe(&x, f, &g, &p, b, |xt| obj.evaluate(xt), &cfg.line_search);
        evals += outcome.trial_count;

        let mut record = IterationRecord {
            k,
            f,
            grad_evals: evals,
            tight_count: b.tight_count(&x),
            a_init: a_init.len(),
            a_final: a_final.len(),
            alpha: outcome.alpha,
            ls_status: outcome.status,
            ls_trials: outcome.trial_count,
            correction_solves,
            correction_rounds,
            qp_fallback,
            pair: None,
        };
        observer(&StepEvent {
            k,
            x: &x,
            f,
            g: &g,
            direction: &p,
            final_set: &a_final,
            outcome: &outcome,
            record: &record,
        });
        if let Some(sets) = active_sets.as_mut() {
            sets.push((a_init, a_final));
        }

        let accepted = match outcome.status {
            LineSearchStatus::NoDirection => {
                iterations.push(record);
                break Termination::NoDirection;
            }
            LineSearchStatus::SearchError => {
                iterations.push(record);
                break Termination::LineSearchError;
            }
            LineSearchStatus::WolfeStep | LineSearchStatus::DecreaseOnly => {
                outcome.accepted.expect("accepted status carries a point")
            }
        };

        let s: Vec<f64> = accepted.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = accepted.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        record.pair = Some(mem.update(&CurvaturePair::new(s, y), cfg.eps_skip));
        iterations.push(record);

        x = accepted.x;
        f = accepted.f;
        g = accepted.g;
        history.push(&x, &g);
        f_history.push(f);
        eval_history.push(evals);
    };

    Ok(RunRecord {
        best_f: f,
        best_x: x,
        f_history,
        eval_history,
        iterations,
        active_sets,
        grad_eval_count: evals,
        termination,
        qp_fallbacks,
        skipped_pairs: mem.skipped(),
        wall_time: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(n: usize) -> FnObjective<impl Fn(&[f64]) -> (f64, Vec<f64>) + Sync> {
        // f = Σ (i+1)/2 (x_i − 1)²
        FnObjective::new(n, |x: &[f64]| {
            let mut f = 0.0;
            let mut g = vec![0.0; x.len()];
            for (i, &xi) in x.iter().enumerate() {
                let c = (i + 1) as f64;
                f += 0.5 * c * (xi - 1.0).powi(2);
                g[i] = c * (xi - 1.0);
            }
            (f, g)
        })
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("v3".parse::<Variant>().unwrap(), Variant::V3);
        assert_eq!("4".parse::<Variant>().unwrap(), Variant::V4);
        assert!("V5".parse::<Variant>().is_err());
        assert_eq!(Variant::V2.to_string(), "V2");
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let obj = quad(3);
        let b = Bounds::unbounded(3);
        let rec = nqn_solve(&obj, &b, &[1.0; 3], &SolverConfig::default()).unwrap();
        assert_eq!(rec.termination, Termination::Stationary);
        assert_eq!(rec.f_history, vec![0.0]);
        assert_eq!(rec.grad_eval_count, 1);
    }

    #[test]
    fn convex_quadratic_with_inactive_bounds() {
        let n = 5;
        let obj = quad(n);
        let b = Bounds::new(vec![-10.0; n], vec![10.0; n]).unwrap();
        let cfg = SolverConfig { variant: Variant::V1, stationarity_tol: 1e-10, ..Default::default() };
        let rec = nqn_solve(&obj, &b, &vec![0.0; n], &cfg).unwrap();
        assert_eq!(rec.termination, Termination::Stationary);
        for v in &rec.best_x {
            assert!((v - 1.0).abs() < 1e-6, "{:?}", rec.best_x);
        }
        assert!(rec.iterations.len() <= 3 * n);
    }

    #[test]
    fn active_bounds_are_identified() {
        let n = 4;
        let obj = quad(n);
        let b = Bounds::new(vec![-10.0; n], vec![0.5, 10.0, 0.5, 10.0]).unwrap();
        for v in Variant::ALL {
            let rec = nqn_solve(&obj, &b, &vec![0.0; n], &SolverConfig::with_variant(v)).unwrap();
            assert_eq!(rec.best_x[0], 0.5, "{v}");
            assert_eq!(rec.best_x[2], 0.5, "{v}");
            assert!((rec.best_x[1] - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn history_is_monotone_and_evals_counted() {
        let obj = FnObjective::new(2, |x: &[f64]| {
            let f = x[0].abs() + 2.0 * x[1].abs();
            let sg = |t: f64| if t >= 0.0 { 1.0 } else { -1.0 };
            (f, vec![sg(x[0]), 2.0 * sg(x[1])])
        });
        let b = Bounds::new(vec![-3.0, 0.25], vec![3.0, 3.0]).unwrap();
        let rec = nqn_solve(&obj, &b, &[1.3, 2.1], &SolverConfig::default()).unwrap();
        assert!(rec.f_history.windows(2).all(|w| w[1] <= w[0]));
        let trials: usize = rec.iterations.iter().map(|r| r.ls_trials).sum();
        assert_eq!(rec.grad_eval_count, 1 + trials);
        assert_eq!(rec.f_history.len(), rec.eval_history.len());
        assert!(rec.best_f < 0.6);
    }

    #[test]
    fn evals_to_reach_uses_first_hit() {
        let rec = RunRecord {
            f_history: vec![10.0, 5.0, 1.0, 0.5],
            eval_history: vec![1, 3, 7, 9],
            iterations: vec![],
            active_sets: None,
            grad_eval_count: 9,
            termination: Termination::BudgetExhausted,
            qp_fallbacks: 0,
            skipped_pairs: 0,
            best_f: 0.5,
            best_x: vec![],
            wall_time: 0.0,
        };
        assert_eq!(rec.evals_to_reach(0.0, 0.2), Some(7));
        assert_eq!(rec.evals_to_reach(0.0, 0.01), None);
        assert_eq!(rec.evals_to_reach(10.0, 1e-8), Some(1));
    }

    #[test]
    fn config_errors() {
        let obj = quad(2);
        let b = Bounds::unbounded(2);
        let bad = SolverConfig { memory: 0, ..Default::default() };
        assert_eq!(nqn_solve(&obj, &b, &[0.0; 2], &bad), Err(ConfigError::ZeroMemory));
        assert!(matches!(
            nqn_solve(&obj, &b, &[0.0; 3], &SolverConfig::default()),
            Err(ConfigError::StartLength { .. })
        ));
    }
}
