//! Projected weak Wolfe bracketing line search.
//!
//! Trial points are `P(x + α p̄)` with `p̄ = T(x, p)`. A step is accepted when
//!
//! ```text
//! f(x_trial) ≤ f(x) + α c1 ∇f(x)ᵀp̄                      (sufficient decrease)
//! ∇f(x_trial)ᵀ T(x_trial, p) ≥ c2 ∇f(x)ᵀp̄               (curvature)
//! ```
//!
//! Without bounds this reduces to the usual weak Wolfe bisection/doubling
//! scheme for nonsmooth functions.

use crate::geometry::{project, t_operator, Bounds};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    pub c1: f64,
    pub c2: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Backstop on bracketing iterations; hitting it is a search error.
    pub max_iterations: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self { c1: 1e-8, c2: 0.9, eps_abs: 1e-16, eps_rel: 1e-6, max_iterations: 200 }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.c1) || !in_unit(self.c2) || self.c1 >= self.c2 {
            return Err(format!("need 0 < c1 < c2 < 1, got c1={} c2={}", self.c1, self.c2));
        }
        if !(self.eps_abs > 0.0) || !(self.eps_rel > 0.0) {
            return Err("bracketing tolerances must be positive".into());
        }
        if self.max_iterations == 0 {
            return Err("max_iterations must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineSearchStatus {
    /// Both conditions hold at `alpha`.
    WolfeStep,
    /// The bracket collapsed; `alpha = L > 0` satisfies sufficient decrease.
    DecreaseOnly,
    /// `T(x, p) = 0`.
    NoDirection,
    /// No acceptable step could be found.
    SearchError,
}

impl LineSearchStatus {
    pub fn accepted(self) -> bool {
        matches!(self, Self::WolfeStep | Self::DecreaseOnly)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::WolfeStep => "wolfe",
            Self::DecreaseOnly => "decrease",
            Self::NoDirection => "no_direction",
            Self::SearchError => "search_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub status: LineSearchStatus,
    pub alpha: f64,
    pub trial_count: usize,
    /// `T(x, p)`, the direction actually searched.
    pub p_bar: Vec<f64>,
    /// `∇f(x)ᵀp̄`.
    pub slope: f64,
    /// Accepted point and its evaluation; `None` unless the status is accepted.
    pub accepted: Option<AcceptedPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedPoint {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
}

/// Largest breakpoint `max_i γ_i` along `p` from `x`; `+∞` when any
/// coordinate can move indefinitely or does not move at all.
pub fn max_breakpoint(x: &[f64], p: &[f64], b: &Bounds) -> f64 {
    let (l, u) = (b.lower(), b.upper());
    let mut gmax = f64::NEG_INFINITY;
    for i in 0..x.len() {
        let gamma = if p[i] > 0.0 && x[i] != u[i] {
            (u[i] - x[i]) / p[i]
        } else if p[i] < 0.0 && x[i] != l[i] {
            (x[i] - l[i]) / -p[i]
        } else {
            f64::INFINITY
        };
        gmax = gmax.max(gamma);
    }
    gmax
}

#[inline]
pub fn armijo_holds(f0: f64, slope: f64, alpha: f64, f_trial: f64, c1: f64) -> bool {
    f_trial <= f0 + alpha * c1 * slope
}

/// Curvature condition at a trial point, using the unprojected direction `p`.
pub fn curvature_holds(x_trial: &[f64], g_trial: &[f64], p: &[f64], b: &Bounds, slope: f64, c2: f64) -> bool {
    dot(g_trial, &t_operator(x_trial, p, b)) >= c2 * slope
}

/// Runs the bracketing search from feasible `x` with value `f0` and gradient
/// `g0`. `oracle` returns `(f, ∇f)` at a point; every call counts as one
/// trial.
pub fn modified_wolfe<O>(
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
    b: &Bounds,
    mut oracle: O,
    cfg: &LineSearchConfig,
) -> LineSearchOutcome
where
    O: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x.len();
    let gmax = max_breakpoint(x, p, b);
    let mut lo = 0.0;
    let mut hi = gmax;
    let mut alpha = hi.min(1.0);
    let p_bar = t_operator(x, p, b);
    let fail = |status, p_bar, slope, trials| LineSearchOutcome {
        status,
        alpha: 0.0,
        trial_count: trials,
        p_bar,
        slope,
        accepted: None,
    };

    if p_bar.iter().all(|&v| v == 0.0) {
        return fail(LineSearchStatus::NoDirection, p_bar, 0.0, 0);
    }
    let slope = dot(g0, &p_bar);
    if !(slope < 0.0) {
        // not a descent direction: sufficient decrease would admit ascent
        return fail(LineSearchStatus::SearchError, p_bar, slope, 0);
    }

    let mut trials = 0;
    let mut shrunk = false;
    let mut at_lo: Option<AcceptedPoint> = None;
    let mut trial = vec![0.0; n];
    for _ in 0..cfg.max_iterations {
        for i in 0..n {
            trial[i] = x[i] + alpha * p_bar[i];
        }
        let x_trial = project(&trial, b);
        let (f_trial, g_trial) = oracle(&x_trial);
        trials += 1;

        if !armijo_holds(f0, slope, alpha, f_trial, cfg.c1) {
            hi = alpha;
            shrunk = true;
        } else if !curvature_holds(&x_trial, &g_trial, p, b, slope, cfg.c2) {
            lo = alpha;
            at_lo = Some(AcceptedPoint { x: x_trial, f: f_trial, g: g_trial });
        } else {
            return LineSearchOutcome {
                status: LineSearchStatus::WolfeStep,
                alpha,
                trial_count: trials,
                p_bar,
                slope,
                accepted: Some(AcceptedPoint { x: x_trial, f: f_trial, g: g_trial }),
            };
        }

        alpha = if hi < gmax || shrunk { 0.5 * (hi + lo) } else { (2.0 * lo).min(hi) };

        if hi - lo < cfg.eps_abs + cfg.eps_rel * lo {
            return match at_lo {
                Some(point) if lo > 0.0 => LineSearchOutcome {
                    status: LineSearchStatus::DecreaseOnly,
                    alpha: lo,
                    trial_count: trials,
                    p_bar,
                    slope,
                    accepted: Some(point),
                },
                _ => fail(LineSearchStatus::SearchError, p_bar, slope, trials),
            };
        }
    }
    fail(LineSearchStatus::SearchError, p_bar, slope, trials)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn half_sq(x: &[f64]) -> (f64, Vec<f64>) {
        (0.5 * dot(x, x), x.to_vec())
    }

    #[test]
    fn breakpoints() {
        let b = Bounds::new(vec![-INF, -INF], vec![2.0, 5.0]).unwrap();
        assert_eq!(max_breakpoint(&[0.0, 0.0], &[1.0, 1.0], &b), 5.0);
        assert_eq!(max_breakpoint(&[0.0, 0.0], &[0.0, 0.0], &b), INF);
        let b = Bounds::new(vec![-3.0], vec![INF]).unwrap();
        assert_eq!(max_breakpoint(&[0.0], &[-1.0], &b), 3.0);
        // the trial point leaves the interior exactly at the breakpoint
        assert_eq!(project(&[0.0 + -3.0], &b), vec![-3.0]);
        assert_eq!(project(&[0.0 + -2.9], &b), vec![-2.9]);
    }

    #[test]
    fn exact_minimizer_is_a_wolfe_step() {
        let b = Bounds::unbounded(2);
        let x = [1.0, 0.0];
        let (f0, g0) = half_sq(&x);
        let out = modified_wolfe(&x, f0, &g0, &[-1.0, 0.0], &b, half_sq, &LineSearchConfig::default());
        assert_eq!(out.status, LineSearchStatus::WolfeStep);
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.trial_count, 1);
        assert_eq!(out.accepted.unwrap().x, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_projected_direction() {
        let b = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let mut calls = 0;
        let out = modified_wolfe(
            &[0.0, 1.0],
            0.0,
            &[1.0, -1.0],
            &[-1.0, 2.0],
            &b,
            |x: &[f64]| {
                calls += 1;
                half_sq(x)
            },
            &LineSearchConfig::default(),
        );
        assert_eq!(out.status, LineSearchStatus::NoDirection);
        assert_eq!(out.trial_count, 0);
        assert_eq!(calls, 0);
    }

    #[test]
    fn abs_value_steps_past_the_kink() {
        let b = Bounds::new(vec![-5.0], vec![5.0]).unwrap();
        let abs = |x: &[f64]| (x[0].abs(), vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }]);
        let out = modified_wolfe(&[1.0], 1.0, &[1.0], &[-1.0], &b, abs, &LineSearchConfig::default());
        // α = 1 lands on the kink where the one-sided gradient is +1
        assert_eq!(out.status, LineSearchStatus::WolfeStep);
        let acc = out.accepted.unwrap();
        assert!(acc.f < 1.0);
        let s = acc.x[0] - 1.0;
        let y = acc.g[0] - 1.0;
        // gradient difference across the kink is zero with sign(0) = +1
        assert!(s * y >= 0.0);
    }

    #[test]
    fn abs_value_from_shifted_start_crosses() {
        let b = Bounds::new(vec![-5.0], vec![5.0]).unwrap();
        let abs = |x: &[f64]| (x[0].abs(), vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }]);
        // from x = 0.7 the first trial α = 1 lands at −0.3: slope +1, f = 0.3 < 0.7
        let out = modified_wolfe(&[0.7], 0.7, &[1.0], &[-1.0], &b, abs, &LineSearchConfig::default());
        assert_eq!(out.status, LineSearchStatus::WolfeStep);
        let acc = out.accepted.unwrap();
        assert!((acc.x[0] + 0.3).abs() < 1e-15);
        assert!((acc.x[0] - 0.7) * (acc.g[0] - 1.0) > 0.0);
    }

    #[test]
    fn bracket_respects_breakpoint() {
        // minimize −x on [0, 0.25]: curvature never holds, steps stop at the bound
        let b = Bounds::new(vec![0.0], vec![0.25]).unwrap();
        let lin = |x: &[f64]| (-x[0], vec![-1.0]);
        let out = modified_wolfe(&[0.0], 0.0, &[-1.0], &[1.0], &b, lin, &LineSearchConfig::default());
        // at the bound the projected curvature term is 0 ≥ 0.9·(−1)
        assert_eq!(out.status, LineSearchStatus::WolfeStep);
        assert_eq!(out.accepted.unwrap().x, vec![0.25]);
    }

    #[test]
    fn armijo_failure_at_breakpoint_bisects() {
        // f = (x − 0.1)² on [0, 0.5], start at 0 heading right with a long step
        let b = Bounds::new(vec![0.0], vec![0.5]).unwrap();
        let q = |x: &[f64]| ((x[0] - 0.1).powi(2), vec![2.0 * (x[0] - 0.1)]);
        let (f0, g0) = q(&[0.0]);
        let out = modified_wolfe(&[0.0], f0, &g0, &[10.0], &b, q, &LineSearchConfig::default());
        assert_eq!(out.status, LineSearchStatus::WolfeStep);
        assert!(out.accepted.unwrap().f < f0);
    }

    #[test]
    fn non_descent_direction_is_rejected() {
        let b = Bounds::unbounded(1);
        let out = modified_wolfe(&[1.0], 0.5, &[1.0], &[1.0], &b, half_sq, &LineSearchConfig::default());
        assert_eq!(out.status, LineSearchStatus::SearchError);
        assert_eq!(out.trial_count, 0);
    }

    #[test]
    fn config_validation() {
        assert!(LineSearchConfig::default().validate().is_ok());
        let bad = LineSearchConfig { c1: 0.95, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
