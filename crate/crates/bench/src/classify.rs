//! Convergence classification against the best value found on an instance.

use std::collections::{BTreeMap, HashMap};

use nqn_core::{RunRecord, Termination, Variant};

use crate::{InstanceKey, RunResult};

/// Why a run that never reached the tolerance stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OtherCause {
    /// No feasible descent direction: zero model direction, numerical
    /// breakdown, or exact stationarity short of the tolerance.
    NoDirection,
    SearchError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flag {
    Ok,
    Max,
    Other(OtherCause),
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Ok => "OK",
            Flag::Max => "MAX",
            Flag::Other(_) => "OTHER",
        }
    }
}

/// OK when some recorded iterate satisfies `(f − f*)/(f⁰ − f*) < eps`, or
/// when `f⁰ ≤ f*`. Otherwise MAX if the budget ran out, else OTHER.
pub fn classify(record: &RunRecord, f_star: f64, eps: f64) -> Flag {
    if record.evals_to_reach(f_star, eps).is_some() {
        return Flag::Ok;
    }
    match record.termination {
        Termination::BudgetExhausted => Flag::Max,
        Termination::LineSearchError => Flag::Other(OtherCause::SearchError),
        Termination::NoDirection | Termination::Stationary => Flag::Other(OtherCause::NoDirection),
    }
}

/// `f*` per instance: the lowest `best_f` over every participating variant.
pub fn f_star_by_instance(results: &[RunResult]) -> HashMap<InstanceKey, f64> {
    let mut out: HashMap<InstanceKey, f64> = HashMap::new();
    for r in results {
        let e = out.entry(r.key).or_insert(f64::INFINITY);
        *e = e.min(r.record.best_f);
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlagCounts {
    pub ok: usize,
    pub max: usize,
    pub other_no_direction: usize,
    pub other_search_error: usize,
}

impl FlagCounts {
    pub fn add(&mut self, flag: Flag) {
        match flag {
            Flag::Ok => self.ok += 1,
            Flag::Max => self.max += 1,
            Flag::Other(OtherCause::NoDirection) => self.other_no_direction += 1,
            Flag::Other(OtherCause::SearchError) => self.other_search_error += 1,
        }
    }

    pub fn other(&self) -> usize {
        self.other_no_direction + self.other_search_error
    }

    pub fn total(&self) -> usize {
        self.ok + self.max + self.other()
    }
}

/// Flag tallies per variant at tolerance `eps`.
pub fn flag_counts(results: &[RunResult], eps: f64) -> BTreeMap<Variant, FlagCounts> {
    let f_star = f_star_by_instance(results);
    let mut out: BTreeMap<Variant, FlagCounts> = BTreeMap::new();
    for r in results {
        out.entry(r.variant).or_default().add(classify(&r.record, f_star[&r.key], eps));
    }
    out
}
