//! Output files: per-run CSV, flag summary and SVG profiles.
//!
//! All output is a pure function of the results, which arrive in canonical
//! order, so repeated runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nqn_core::Variant;

use crate::{
    build_profiles, classify, correction_ratios, f_star_by_instance, flag_counts, BenchError, ProfileTable, RunResult,
    RunSpec,
};

pub const CSV_HEADER: [&str; 8] =
    ["problem", "n", "start_seed", "variant", "flag", "grad_evals", "best_f", "wall_time"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

/// Writes `runs.csv`, `summary.txt` and `profile_eps<eps>.svg` for each
/// tolerance into the spec's output directory. Returns the paths written.
pub fn emit(results: &[RunResult], spec: &RunSpec) -> Result<Vec<PathBuf>, BenchError> {
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();

    let csv_path = dir.join("runs.csv");
    write_csv(&csv_path, results, spec.flag_eps)?;
    written.push(csv_path);

    let summary_path = dir.join("summary.txt");
    write_summary(&summary_path, results, spec)?;
    written.push(summary_path);

    for &eps in &spec.epsilons {
        let path = dir.join(format!("profile_eps{eps:e}.svg"));
        write_svg(&path, &build_profiles(results, eps))?;
        written.push(path);
    }
    Ok(written)
}

pub fn write_csv(path: &Path, results: &[RunResult], flag_eps: f64) -> Result<(), BenchError> {
    let csv_err = |source| BenchError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let f_star = f_star_by_instance(results);
    for r in results {
        let flag = classify(&r.record, f_star[&r.key], flag_eps);
        w.write_record([
            r.key.problem.name().to_string(),
            r.key.n.to_string(),
            r.key.seed.to_string(),
            r.variant.to_string(),
            flag.as_str().to_string(),
            r.record.grad_eval_count.to_string(),
            r.record.best_f.to_string(),
            format!("{:.6}", r.record.wall_time),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Flag counts per tolerance and variant. OTHER is split as `a + b` with
/// `a` runs that found no feasible descent direction and `b` line-search
/// failures.
pub fn summary_text(results: &[RunResult], spec: &RunSpec) -> String {
    let mut s = String::new();
    let instances = f_star_by_instance(results).len();
    let _ = writeln!(s, "runs: {}  instances: {}  budget: {}n", results.len(), instances, spec.budget_multiplier);
    for &eps in &spec.epsilons {
        let counts = flag_counts(results, eps);
        let profile = build_profiles(results, eps);
        let _ = writeln!(s, "\neps = {eps:e}");
        let _ = writeln!(s, "{:<8}{:>6}{:>6}{:>12}{:>10}", "variant", "OK", "MAX", "OTHER", "rho(inf)");
        for (v, c) in &counts {
            let solved = profile.solver_index(*v).map_or(0.0, |i| profile.solved_fraction(i));
            let other = format!("{} + {}", c.other_no_direction, c.other_search_error);
            let _ = writeln!(s, "{:<8}{:>6}{:>6}{:>12}{:>10.3}", v.to_string(), c.ok, c.max, other, solved);
        }
    }
    let ratios = correction_ratios(results);
    if !ratios.is_empty() {
        let _ = writeln!(s, "\ncorrection solves V3/V4");
        for (name, r) in ratios {
            let _ = writeln!(s, "{name:<20}{r:>8.2}");
        }
    }
    s
}

pub fn write_summary(path: &Path, results: &[RunResult], spec: &RunSpec) -> Result<(), BenchError> {
    fs::write(path, summary_text(results, spec)).map_err(io_err(path))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 110.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

fn colour(v: Variant) -> &'static str {
    match v {
        Variant::V1 => "#d62728",
        Variant::V2 => "#ff7f0e",
        Variant::V3 => "#1f77b4",
        Variant::V4 => "#2ca02c",
    }
}

/// Standalone SVG 1.1 document: `log₂ τ` on the x axis, `ρ(τ)` on the y
/// axis, one step polyline per solver.
pub fn svg_text(table: &ProfileTable) -> String {
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let log_top = table.tau.last().copied().unwrap_or(2.0).log2().max(1.0);
    let px = |tau: f64| MARGIN_L + plot_w * tau.log2() / log_top;
    let py = |rho: f64| MARGIN_T + plot_h * (1.0 - rho);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">performance profile, eps = {:e}, {} instances</text>"#,
        MARGIN_L + plot_w / 2.0,
        table.eps,
        table.instances.len()
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let rho = f64::from(i) / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{rho:.2}</text>"#,
            MARGIN_L - 6.0,
            py(rho) + 4.0
        );
    }
    let ticks = log_top.ceil() as u32;
    let step = (ticks / 8).max(1);
    for t in (0..=ticks).step_by(step as usize) {
        let x = MARGIN_L + plot_w * f64::from(t) / log_top;
        if x > MARGIN_L + plot_w + 0.5 {
            break;
        }
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{t}</text>"#,
            MARGIN_T + plot_h + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">log2(tau), gradient evaluations</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0
    );
    for (si, &v) in table.solvers.iter().enumerate() {
        let mut pts = String::new();
        let mut prev: Option<f64> = None;
        for (&tau, &rho) in table.tau.iter().zip(&table.rho[si]) {
            if let Some(p) = prev {
                let _ = write!(pts, "{:.2},{:.2} ", px(tau), py(p));
            }
            let _ = write!(pts, "{:.2},{:.2} ", px(tau), py(rho));
            prev = Some(rho);
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            colour(v),
            pts.trim_end()
        );
        let ly = MARGIN_T + 16.0 + 18.0 * si as f64;
        let lx = MARGIN_L + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/>"#,
            lx + 20.0,
            colour(v)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{v}</text>"#,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, table: &ProfileTable) -> Result<(), BenchError> {
    fs::write(path, svg_text(table)).map_err(io_err(path))
}
