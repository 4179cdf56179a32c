//! Iterative active-set correction: grow the candidate set until the model
//! direction no longer points out of the box at any tight coordinate.

use crate::geometry::{stationarity_residual, t_operator, ActiveSet, BoundSide, Bounds};
use crate::lbfgs::{LbfgsMemory, NumericalBreakdown};

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionOutcome {
    pub final_set: ActiveSet,
    pub direction: Vec<f64>,
    /// Number of subspace solves performed.
    pub loop_count: usize,
    /// Indices added in each round, in order.
    pub added_per_round: Vec<Vec<usize>>,
}

/// Runs the correction loop from `initial`, which must only contain
/// coordinates that are tight at `x`.
pub fn correct(
    x: &[f64],
    g: &[f64],
    b: &Bounds,
    initial: &ActiveSet,
    mem: &LbfgsMemory,
) -> Result<CorrectionOutcome, NumericalBreakdown> {
    let n = x.len();
    assert_eq!(initial.dim(), n, "initial active set has wrong dimension");
    let tight: Vec<(usize, BoundSide)> = (0..n).filter_map(|i| b.tight_side(x, i).map(|s| (i, s))).collect();
    debug_assert!(
        initial.iter().all(|(i, _)| b.tight_side(x, i).is_some()),
        "initial active set must be a subset of the tight coordinates"
    );

    if tight.is_empty() {
        let empty = ActiveSet::empty(n);
        let rep = mem.subspace_solve(g, &empty)?;
        return Ok(CorrectionOutcome {
            final_set: empty,
            direction: rep.direction,
            loop_count: 1,
            added_per_round: Vec::new(),
        });
    }

    let mut active = initial.clone();
    let mut added_per_round = Vec::new();
    let mut loop_count = 0;
    loop {
        let rep = mem.subspace_solve(g, &active)?;
        loop_count += 1;
        let p = rep.direction;
        let added: Vec<(usize, BoundSide)> = tight
            .iter()
            .copied()
            .filter(|&(i, side)| {
                !active.contains(i)
                    && match side {
                        BoundSide::Lower => p[i] < 0.0,
                        BoundSide::Upper => p[i] > 0.0,
                    }
            })
            .collect();
        if added.is_empty() {
            return Ok(CorrectionOutcome { final_set: active, direction: p, loop_count, added_per_round });
        }
        for &(i, side) in &added {
            active.insert(i, side);
        }
        added_per_round.push(added.into_iter().map(|(i, _)| i).collect());
    }
}

/// Checks that a zero direction is only produced at a first-order point.
/// A `false` return signals a defect.
pub fn lemma1_check(x: &[f64], g: &[f64], b: &Bounds, outcome: &CorrectionOutcome) -> bool {
    let direction_nonzero = outcome.direction.iter().any(|&v| v != 0.0);
    direction_nonzero || stationarity_residual(x, g, b).iter().all(|&v| v == 0.0)
}

/// `true` when `T(x, p) = p`.
pub fn is_feasible_direction(x: &[f64], p: &[f64], b: &Bounds) -> bool {
    t_operator(x, p, b) == p
}
