//! Performance profiles over gradient evaluations.

use std::collections::{BTreeMap, HashMap};

use nqn_core::Variant;
use nqn_problems::ProblemKind;

use crate::{f_star_by_instance, InstanceKey, RunResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub eps: f64,
    pub solvers: Vec<Variant>,
    /// Instances in canonical order.
    pub instances: Vec<InstanceKey>,
    /// `cost[i][s]`: evaluations until the tolerance first held, `None` if never.
    pub cost: Vec<Vec<Option<usize>>>,
    /// `ratio[i][s] = cost[i][s] / min_s cost[i][s]`; infinite when unsolved.
    pub ratio: Vec<Vec<f64>>,
    /// Ascending grid starting at 1.
    pub tau: Vec<f64>,
    /// `rho[s][t]`: fraction of instances with `ratio ≤ tau[t]`.
    pub rho: Vec<Vec<f64>>,
}

impl ProfileTable {
    /// `ρ_s(τ)` evaluated exactly at any `τ`.
    pub fn rho_at(&self, solver: usize, tau: f64) -> f64 {
        if self.instances.is_empty() {
            return 0.0;
        }
        let hits = self.ratio.iter().filter(|r| r[solver] <= tau).count();
        hits as f64 / self.instances.len() as f64
    }

    /// `ρ_s(∞)`.
    pub fn solved_fraction(&self, solver: usize) -> f64 {
        self.rho_at(solver, f64::MAX)
    }

    pub fn solver_index(&self, v: Variant) -> Option<usize> {
        self.solvers.iter().position(|&s| s == v)
    }

    /// Largest finite ratio, at least 1.
    pub fn max_finite_ratio(&self) -> f64 {
        self.ratio.iter().flatten().copied().filter(|r| r.is_finite()).fold(1.0, f64::max)
    }
}

const TAU_POINTS: usize = 200;

/// Profiles at tolerance `eps` for every variant present in `results`.
/// Instances missing a variant are skipped.
pub fn build_profiles(results: &[RunResult], eps: f64) -> ProfileTable {
    let f_star = f_star_by_instance(results);
    let solvers: Vec<Variant> = {
        let mut v: Vec<Variant> = results.iter().map(|r| r.variant).collect();
        v.sort();
        v.dedup();
        v
    };
    let mut by_instance: HashMap<InstanceKey, Vec<Option<Option<usize>>>> = HashMap::new();
    for r in results {
        let s = solvers.binary_search(&r.variant).expect("variant collected above");
        let row = by_instance.entry(r.key).or_insert_with(|| vec![None; solvers.len()]);
        row[s] = Some(r.record.evals_to_reach(f_star[&r.key], eps).map(|c| c.max(1)));
    }
    let mut instances: Vec<InstanceKey> =
        by_instance.iter().filter(|(_, row)| row.iter().all(Option::is_some)).map(|(k, _)| *k).collect();
    instances.sort_by(InstanceKey::canonical_cmp);
    let cost: Vec<Vec<Option<usize>>> =
        instances.iter().map(|k| by_instance[k].iter().map(|c| c.expect("complete row")).collect()).collect();
    let ratio: Vec<Vec<f64>> = cost
        .iter()
        .map(|row| {
            let best = row.iter().flatten().min().copied();
            row.iter()
                .map(|c| match (c, best) {
                    (Some(c), Some(b)) => *c as f64 / b as f64,
                    _ => f64::INFINITY,
                })
                .collect()
        })
        .collect();
    let mut table = ProfileTable { eps, solvers, instances, cost, ratio, tau: Vec::new(), rho: Vec::new() };
    let top = table.max_finite_ratio().max(2.0);
    table.tau = (0..TAU_POINTS).map(|t| top.powf(t as f64 / (TAU_POINTS - 1) as f64)).collect();
    table.rho = (0..table.solvers.len()).map(|s| table.tau.iter().map(|&t| table.rho_at(s, t)).collect()).collect();
    table
}

/// Per problem, total correction solves of V3 divided by those of V4.
/// Problems where V4 made no correction solves are omitted.
pub fn correction_ratios(results: &[RunResult]) -> BTreeMap<&'static str, f64> {
    let mut totals: BTreeMap<ProblemKind, (usize, usize)> = BTreeMap::new();
    for r in results {
        let solves: usize = r.record.iterations.iter().map(|it| it.correction_solves).sum();
        let e = totals.entry(r.key.problem).or_default();
        match r.variant {
            Variant::V3 => e.0 += solves,
            Variant::V4 => e.1 += solves,
            _ => {}
        }
    }
    totals.into_iter().filter(|(_, (_, v4))| *v4 > 0).map(|(p, (v3, v4))| (p.name(), v3 as f64 / v4 as f64)).collect()
}
