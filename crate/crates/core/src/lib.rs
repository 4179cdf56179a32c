//! Limited-memory quasi-Newton minimization of nonsmooth functions over a box.
//!
//! The solver combines a compact-form L-BFGS model restricted to the free
//! variables, an active-set prediction built from an approximate minimum-norm
//! subgradient, an iterative correction that keeps search directions feasible,
//! and a projected weak Wolfe line search.

pub mod correction;
pub mod geometry;
pub mod lbfgs;
pub mod linalg;
pub mod line_search;
pub mod solver;
pub mod subgrad;

pub use correction::{correct, lemma1_check, CorrectionOutcome};
pub use geometry::{
    binding_set, project, stationarity_residual, t_operator, ActiveSet, BoundSide, Bounds, BoundsError,
};
pub use lbfgs::{theta_init, CurvaturePair, LbfgsMemory, NumericalBreakdown, UpdateOutcome};
pub use line_search::{modified_wolfe, LineSearchConfig, LineSearchOutcome, LineSearchStatus};
pub use solver::{
    nqn_solve, nqn_solve_observed, select_active_set, ConfigError, FnObjective, IterationRecord, Objective, RunRecord,
    SolverConfig, StepEvent, Termination, Variant,
};
pub use subgrad::{min_norm_combination, predict_active_set, GradientHistory, MinNormResult};
