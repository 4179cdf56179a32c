use std::collections::HashMap;

use nqn_bench::{
    build_profiles, classify, emit, f_star_by_instance, flag_counts, run_matrix, write_csv, BenchError, Flag,
    InstanceKey, RunResult, RunSpec,
};
use nqn_core::{RunRecord, Termination, Variant};
use nqn_problems::ProblemKind;
use proptest::prelude::*;

fn small_spec(dir: &std::path::Path) -> RunSpec {
    RunSpec {
        problems: vec![ProblemKind::L1, ProblemKind::Maxq],
        dims: vec![10],
        seeds: vec![1, 2],
        variants: vec![Variant::V1, Variant::V3],
        epsilons: vec![1e-2, 1e-4],
        output_dir: dir.to_path_buf(),
        jobs: Some(2),
        ..RunSpec::default()
    }
}

fn record(f_history: Vec<f64>, evals: Vec<usize>, termination: Termination) -> RunRecord {
    let best_f = f_history.iter().copied().fold(f64::INFINITY, f64::min);
    RunRecord {
        grad_eval_count: *evals.last().unwrap(),
        f_history,
        eval_history: evals,
        iterations: Vec::new(),
        active_sets: None,
        termination,
        qp_fallbacks: 0,
        skipped_pairs: 0,
        best_f,
        best_x: Vec::new(),
        wall_time: 0.0,
    }
}

fn synthetic(instance: u64, variant: Variant, rec: RunRecord) -> RunResult {
    RunResult { key: InstanceKey { problem: ProblemKind::L1, n: 2, seed: instance }, variant, budget: 200, record: rec }
}

#[test]
fn empty_results_give_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.csv");
    write_csv(&path, &[], 1e-4).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "problem,n,start_seed,variant,flag,grad_evals,best_f,wall_time\n"
    );
}

#[test]
fn matrix_outputs_are_complete_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let results = run_matrix(&spec).unwrap();
    assert_eq!(results.len(), 8);
    let written = emit(&results, &spec).unwrap();
    assert_eq!(written.len(), 4);

    let mut reader = csv::Reader::from_path(dir.path().join("runs.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 8);
    let keys: Vec<(String, String, String)> =
        rows.iter().map(|r| (r[0].to_string(), r[2].to_string(), r[3].to_string())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted, "rows are in canonical order");
    assert!(rows.iter().all(|r| r[7] == *"0.000000"), "timing is off by default");

    for eps in ["1e-2", "1e-4"] {
        let svg = std::fs::read_to_string(dir.path().join(format!("profile_eps{eps}.svg"))).unwrap();
        let doc = roxmltree::Document::parse(&svg).expect("well-formed XML");
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert_eq!(doc.root_element().attribute("version"), Some("1.1"));
        let polylines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
        assert_eq!(polylines, spec.variants.len());
    }

    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("eps = 1e-2") && summary.contains("eps = 1e-4"));
}

#[test]
fn flag_counts_sum_to_instance_count() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let results = run_matrix(&spec).unwrap();
    for &eps in &[1e-2, 1e-4, 1e-6, 1e-8] {
        let counts = flag_counts(&results, eps);
        for c in counts.values() {
            assert_eq!(c.total(), 4);
        }
    }
}

#[test]
fn unwritable_output_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let spec = RunSpec { output_dir: blocker.join("sub"), ..small_spec(dir.path()) };
    let err = emit(&[], &spec).unwrap_err();
    assert!(matches!(err, BenchError::Io { .. }));
    assert!(err.to_string().contains("sub"), "{err}");
}

#[test]
fn parallel_and_sequential_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let par = run_matrix(&RunSpec { jobs: Some(3), ..small_spec(dir.path()) }).unwrap();
    let seq = run_matrix(&RunSpec { jobs: Some(1), ..small_spec(dir.path()) }).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn classification_examples() {
    let solved = record(vec![10.0, 1.0, 0.0], vec![1, 5, 9], Termination::BudgetExhausted);
    for eps in [1e-2, 1e-4, 1e-8] {
        assert_eq!(classify(&solved, 0.0, eps), Flag::Ok);
    }
    let stuck = record(vec![10.0, 5.0], vec![1, 3], Termination::NoDirection);
    assert_eq!(classify(&stuck, 0.0, 1e-2), Flag::Other(nqn_bench::classify::OtherCause::NoDirection));
    let failed = record(vec![10.0, 5.0], vec![1, 3], Termination::LineSearchError);
    assert_eq!(classify(&failed, 0.0, 1e-2), Flag::Other(nqn_bench::classify::OtherCause::SearchError));
    let slow = record(vec![10.0, 5.0], vec![1, 300], Termination::BudgetExhausted);
    assert_eq!(classify(&slow, 0.0, 1e-2), Flag::Max);
    let at_start = record(vec![0.0], vec![1], Termination::Stationary);
    assert_eq!(classify(&at_start, 0.0, 1e-8), Flag::Ok);
}

#[test]
fn single_solver_profile_is_flat() {
    let results = vec![
        synthetic(1, Variant::V3, record(vec![1.0, 0.0], vec![1, 4], Termination::Stationary)),
        synthetic(2, Variant::V3, record(vec![1.0, 0.0], vec![1, 7], Termination::Stationary)),
    ];
    let t = build_profiles(&results, 1e-4);
    assert_eq!(t.rho_at(0, 1.0), 1.0);
    assert!(t.rho[0].iter().all(|&r| r == 1.0));
}

#[test]
fn dominant_solver_curve_is_above() {
    let mut results = Vec::new();
    for i in 0..5 {
        let fast = 2 + i as usize;
        results.push(synthetic(i, Variant::V4, record(vec![1.0, 0.0], vec![1, fast], Termination::Stationary)));
        results.push(synthetic(i, Variant::V1, record(vec![1.0, 0.0], vec![1, 3 * fast], Termination::Stationary)));
    }
    let t = build_profiles(&results, 1e-4);
    let (a, b) = (t.solver_index(Variant::V4).unwrap(), t.solver_index(Variant::V1).unwrap());
    for k in 0..t.tau.len() {
        assert!(t.rho[a][k] >= t.rho[b][k]);
    }
    assert_eq!(t.rho_at(a, 1.0), 1.0);
    assert_eq!(t.rho_at(b, 1.0), 0.0);
}

/// Runs as (f_history tail, termination) per instance and variant.
fn arb_results() -> impl Strategy<Value = Vec<RunResult>> {
    let run = (prop::collection::vec(0.0f64..10.0, 0..6), prop::bool::ANY);
    prop::collection::vec(prop::collection::vec(run, 3), 1..6).prop_map(|instances| {
        let mut out = Vec::new();
        for (i, runs) in instances.into_iter().enumerate() {
            for (v, (mut tail, budget)) in Variant::ALL.into_iter().zip(runs) {
                tail.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let mut f = vec![10.0];
                f.extend(tail);
                let evals: Vec<usize> = (0..f.len()).map(|k| 1 + 3 * k).collect();
                let term = if budget { Termination::BudgetExhausted } else { Termination::NoDirection };
                out.push(synthetic(i as u64, v, record(f, evals, term)));
            }
        }
        out
    })
}

proptest! {
    #[test]
    fn profile_invariants(results in arb_results(), eps in prop::sample::select(vec![1e-2, 1e-4, 1e-8])) {
        let t = build_profiles(&results, eps);
        for (s, curve) in t.rho.iter().enumerate() {
            prop_assert!(curve.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(*curve.last().unwrap() <= t.solved_fraction(s));
            prop_assert_eq!(t.rho_at(s, t.max_finite_ratio()), t.solved_fraction(s));
        }
        for row in &t.ratio {
            prop_assert!(row.iter().all(|&r| r >= 1.0));
            if row.iter().any(|r| r.is_finite()) {
                prop_assert!(row.contains(&1.0));
            }
        }
        let counts = flag_counts(&results, eps);
        for c in counts.values() {
            prop_assert_eq!(c.total(), t.instances.len());
        }
    }

    #[test]
    fn profiles_ignore_labels_and_duplication(results in arb_results()) {
        let t = build_profiles(&results, 1e-4);
        // swap V1 and V3 labels
        let relabelled: Vec<RunResult> = results.iter().cloned().map(|mut r| {
            r.variant = match r.variant { Variant::V1 => Variant::V3, Variant::V3 => Variant::V1, v => v };
            r
        }).collect();
        let u = build_profiles(&relabelled, 1e-4);
        let (i1, i3) = (t.solver_index(Variant::V1).unwrap(), t.solver_index(Variant::V3).unwrap());
        prop_assert_eq!(&t.rho[i1], &u.rho[i3]);
        prop_assert_eq!(&t.rho[i3], &u.rho[i1]);
        // duplicate every instance under a fresh seed
        let mut doubled = results.clone();
        doubled.extend(results.iter().cloned().map(|mut r| { r.key.seed += 1000; r }));
        let d = build_profiles(&doubled, 1e-4);
        prop_assert_eq!(&t.rho, &d.rho);
    }

    #[test]
    fn more_solvers_only_remove_ok_flags(results in arb_results(), eps in prop::sample::select(vec![1e-2, 1e-4])) {
        let subset: Vec<RunResult> = results.iter().filter(|r| r.variant != Variant::V3).cloned().collect();
        let f_sub = f_star_by_instance(&subset);
        let f_all = f_star_by_instance(&results);
        let flags = |rs: &[RunResult], fs: &HashMap<InstanceKey, f64>| -> HashMap<(InstanceKey, Variant), Flag> {
            rs.iter().map(|r| ((r.key, r.variant), classify(&r.record, fs[&r.key], eps))).collect()
        };
        let before = flags(&subset, &f_sub);
        let after = flags(&results, &f_all);
        for (k, fb) in before {
            prop_assert!(f_all[&k.0] <= f_sub[&k.0]);
            if after[&k] == Flag::Ok {
                prop_assert_eq!(fb, Flag::Ok);
            }
        }
    }
}
