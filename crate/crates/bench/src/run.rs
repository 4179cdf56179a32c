//! Parallel execution of the run matrix.

use std::cmp::Ordering;

use nqn_core::{nqn_solve_observed, RunRecord, SolverConfig, StepEvent, Variant};
use nqn_problems::{start_for_seed, Problem, ProblemKind};
use rayon::prelude::*;

use crate::{BenchError, RunSpec};

/// One problem instance: all variants run from the same start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InstanceKey {
    pub problem: ProblemKind,
    pub n: usize,
    pub seed: u64,
}

impl InstanceKey {
    /// Sort order of the output files: name, then n, then seed.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        (self.problem.name(), self.n, self.seed).cmp(&(other.problem.name(), other.n, other.seed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub key: InstanceKey,
    pub variant: Variant,
    pub budget: usize,
    pub record: RunRecord,
}

pub fn run_matrix(spec: &RunSpec) -> Result<Vec<RunResult>, BenchError> {
    run_matrix_observed(spec, &|_, _, _| {})
}

/// Like [`run_matrix`], calling `observer` for every line search of every
/// run. The observer runs on worker threads.
pub fn run_matrix_observed<F>(spec: &RunSpec, observer: &F) -> Result<Vec<RunResult>, BenchError>
where
    F: Fn(&InstanceKey, Variant, &StepEvent<'_>) + Sync,
{
    spec.validate()?;
    let mut jobs = Vec::new();
    for &problem in &spec.problems {
        for &n in &spec.dims {
            for &seed in &spec.seeds {
                for &variant in &spec.variants {
                    jobs.push((InstanceKey { problem, n, seed }, variant));
                }
            }
        }
    }
    let work = || -> Result<Vec<RunResult>, BenchError> {
        jobs.par_iter().map(|&(key, variant)| run_one(spec, key, variant, observer)).collect()
    };
    let mut results = match spec.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| BenchError::Pool(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    results.sort_by(|a, b| a.key.canonical_cmp(&b.key).then(a.variant.cmp(&b.variant)));
    Ok(results)
}

fn run_one<F>(spec: &RunSpec, key: InstanceKey, variant: Variant, observer: &F) -> Result<RunResult, BenchError>
where
    F: Fn(&InstanceKey, Variant, &StepEvent<'_>) + Sync,
{
    let problem = Problem::new(key.problem, key.n)?;
    let b = problem.bounds();
    let x0 = start_for_seed(&b, key.seed);
    let budget = spec.budget(key.n);
    let cfg = SolverConfig { budget: Some(budget), ..SolverConfig::with_variant(variant) };
    let mut record = nqn_solve_observed(&problem, &b, &x0, &cfg, |ev| observer(&key, variant, ev))?;
    if !spec.timing {
        record.wall_time = 0.0;
    }
    Ok(RunResult { key, variant, budget, record })
}
