//! Benchmark harness for the NQN variants.
//!
//! A [`RunSpec`] describes a matrix of problems, dimensions, start seeds and
//! variants. [`run_matrix`] executes it in parallel and returns results in
//! canonical order. The results are classified per tolerance into
//! OK / MAX / OTHER ([`classify`]) and summarized as performance profiles
//! over gradient evaluations ([`build_profiles`]). [`emit`] writes the
//! per-run CSV, the flag summary and one SVG profile per tolerance.

use std::path::PathBuf;

pub mod classify;
pub mod emit;
pub mod profile;
pub mod run;
pub mod spec;

pub use classify::{classify, f_star_by_instance, flag_counts, Flag, FlagCounts};
pub use emit::{emit, write_csv, write_summary, write_svg, CSV_HEADER};
pub use profile::{build_profiles, correction_ratios, ProfileTable};
pub use run::{run_matrix, run_matrix_observed, InstanceKey, RunResult};
pub use spec::{parse_spec, resolve, Resolved, RunSpec, Source, SpecOverrides};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("run spec line {line}: {message}")]
    Spec { line: usize, message: String },
    #[error(transparent)]
    Problem(#[from] nqn_problems::ProblemError),
    #[error(transparent)]
    Config(#[from] nqn_core::ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}
