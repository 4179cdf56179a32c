//! Run-matrix specification: `key = value` files, command-line overrides and
//! built-in defaults, resolved in that order of precedence.

use std::fmt;
use std::path::PathBuf;

use nqn_core::Variant;
use nqn_problems::ProblemKind;

use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problems: Vec<ProblemKind>,
    pub dims: Vec<usize>,
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    pub epsilons: Vec<f64>,
    pub budget_multiplier: usize,
    /// Tolerance used for the CSV flag column.
    pub flag_eps: f64,
    pub output_dir: PathBuf,
    /// Record wall time in the CSV; off keeps outputs byte-stable.
    pub timing: bool,
    /// Worker threads; `None` lets the pool decide.
    pub jobs: Option<usize>,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            problems: ProblemKind::ALL.to_vec(),
            dims: vec![100],
            seeds: (1..=10).collect(),
            variants: Variant::ALL.to_vec(),
            epsilons: vec![1e-2, 1e-4, 1e-6, 1e-8],
            budget_multiplier: 100,
            flag_eps: 1e-4,
            output_dir: PathBuf::from("bench_out"),
            timing: false,
            jobs: None,
        }
    }
}

impl RunSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        let empty = |what: &str| Err(BenchError::Spec { line: 0, message: format!("{what} must not be empty") });
        if self.problems.is_empty() {
            return empty("problems");
        }
        if self.dims.is_empty() {
            return empty("dims");
        }
        if self.seeds.is_empty() {
            return empty("seeds");
        }
        if self.variants.is_empty() {
            return empty("variants");
        }
        if self.epsilons.is_empty() {
            return empty("epsilons");
        }
        let bad = |message: String| Err(BenchError::Spec { line: 0, message });
        if self.budget_multiplier == 0 {
            return bad("budget_multiplier must be positive".into());
        }
        if let Some(e) = self.epsilons.iter().chain([&self.flag_eps]).find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("tolerances must lie in (0, 1), got {e}"));
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive".into());
        }
        for &n in &self.dims {
            for &p in &self.problems {
                nqn_problems::Problem::new(p, n)?;
            }
        }
        Ok(())
    }

    pub fn budget(&self, n: usize) -> usize {
        self.budget_multiplier * n
    }
}

/// Partial specification; unset fields fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecOverrides {
    pub problems: Option<Vec<ProblemKind>>,
    pub dims: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub variants: Option<Vec<Variant>>,
    pub epsilons: Option<Vec<f64>>,
    pub budget_multiplier: Option<usize>,
    pub flag_eps: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub timing: Option<bool>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    SpecFile,
    Environment,
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::SpecFile => "spec file",
            Source::Environment => "environment",
            Source::Flag => "flag",
        })
    }
}

/// A resolved specification and where each setting came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub spec: RunSpec,
    pub sources: Vec<(&'static str, Source)>,
}

impl Resolved {
    pub fn describe(&self) -> String {
        let s = &self.spec;
        let join = |v: Vec<String>| v.join(",");
        let value = |key: &str| -> String {
            match key {
                "problems" => join(s.problems.iter().map(|p| p.name().to_string()).collect()),
                "dims" => join(s.dims.iter().map(ToString::to_string).collect()),
                "seeds" => join(s.seeds.iter().map(ToString::to_string).collect()),
                "variants" => join(s.variants.iter().map(ToString::to_string).collect()),
                "epsilons" => join(s.epsilons.iter().map(|e| format!("{e:e}")).collect()),
                "budget_multiplier" => s.budget_multiplier.to_string(),
                "flag_eps" => format!("{:e}", s.flag_eps),
                "output_dir" => s.output_dir.display().to_string(),
                "timing" => s.timing.to_string(),
                "jobs" => s.jobs.map_or_else(|| "auto".into(), |j| j.to_string()),
                _ => unreachable!(),
            }
        };
        self.sources.iter().map(|(k, src)| format!("{k} = {} ({src})\n", value(k))).collect()
    }
}

/// Applies layers lowest-precedence first.
pub fn resolve(layers: &[(Source, &SpecOverrides)]) -> Result<Resolved, BenchError> {
    let mut spec = RunSpec::default();
    let mut sources: Vec<(&'static str, Source)> = KEYS.iter().map(|&k| (k, Source::Default)).collect();
    let mut mark = |key: &'static str, src: Source| {
        if let Some(entry) = sources.iter_mut().find(|(k, _)| *k == key) {
            entry.1 = src;
        }
    };
    for &(src, o) in layers {
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = &o.$field {
                    spec.$field = v.clone();
                    mark(stringify!($field), src);
                }
            };
        }
        take!(problems);
        take!(dims);
        take!(seeds);
        take!(variants);
        take!(epsilons);
        take!(budget_multiplier);
        take!(flag_eps);
        take!(output_dir);
        take!(timing);
        if let Some(j) = o.jobs {
            spec.jobs = Some(j);
            mark("jobs", src);
        }
    }
    spec.validate()?;
    Ok(Resolved { spec, sources })
}

const KEYS: [&str; 10] = [
    "problems",
    "dims",
    "seeds",
    "variants",
    "epsilons",
    "budget_multiplier",
    "flag_eps",
    "output_dir",
    "timing",
    "jobs",
];

/// Parses a `key = value` file. `#` starts a comment.
pub fn parse_spec(text: &str) -> Result<SpecOverrides, BenchError> {
    let mut o = SpecOverrides::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| BenchError::Spec { line: line_no, message };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "problems" => o.problems = Some(parse_problems(value).map_err(err)?),
            "dims" => o.dims = Some(parse_list(value).map_err(err)?),
            "seeds" => o.seeds = Some(parse_seeds(value).map_err(err)?),
            "variants" => o.variants = Some(parse_variants(value).map_err(err)?),
            "epsilons" => o.epsilons = Some(parse_list(value).map_err(err)?),
            "budget_multiplier" => o.budget_multiplier = Some(parse_one(value).map_err(err)?),
            "flag_eps" => o.flag_eps = Some(parse_one(value).map_err(err)?),
            "output_dir" => o.output_dir = Some(PathBuf::from(value)),
            "timing" => o.timing = Some(parse_one(value).map_err(err)?),
            "jobs" => o.jobs = Some(parse_one(value).map_err(err)?),
            other => return Err(err(format!("unknown key {other:?}; expected one of {}", KEYS.join(", ")))),
        }
    }
    Ok(o)
}

fn parse_one<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.trim().parse().map_err(|e| format!("cannot parse {v:?}: {e}"))
}

pub fn parse_list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    v.split(',').filter(|s| !s.trim().is_empty()).map(parse_one).collect()
}

/// Comma list of seeds and inclusive `a-b` ranges.
pub fn parse_seeds(v: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (parse_one(a)?, parse_one(b)?);
                if a > b {
                    return Err(format!("empty seed range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_one(part)?),
        }
    }
    Ok(out)
}

pub fn parse_problems(v: &str) -> Result<Vec<ProblemKind>, String> {
    if v.trim().eq_ignore_ascii_case("all") {
        return Ok(ProblemKind::ALL.to_vec());
    }
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse().map_err(|e: nqn_problems::ProblemError| e.to_string()))
        .collect()
}

pub fn parse_variants(v: &str) -> Result<Vec<Variant>, String> {
    if v.trim().eq_ignore_ascii_case("all") {
        return Ok(Variant::ALL.to_vec());
    }
    parse_list(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "# matrix\nproblems = L1, MAXQ\ndims = 10,20\nseeds = 1-3, 7\nvariants = V1,V3\n\
                    epsilons = 1e-2\nbudget_multiplier = 50\nflag_eps = 1e-3\noutput_dir = out\ntiming = true\njobs = 2\n";
        let o = parse_spec(text).unwrap();
        assert_eq!(o.problems, Some(vec![ProblemKind::L1, ProblemKind::Maxq]));
        assert_eq!(o.dims, Some(vec![10, 20]));
        assert_eq!(o.seeds, Some(vec![1, 2, 3, 7]));
        assert_eq!(o.variants, Some(vec![Variant::V1, Variant::V3]));
        assert_eq!(o.budget_multiplier, Some(50));
        assert_eq!(o.timing, Some(true));
        assert_eq!(o.jobs, Some(2));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(parse_spec("dims 10"), Err(BenchError::Spec { line: 1, .. })));
        assert!(matches!(parse_spec("\ncolour = red"), Err(BenchError::Spec { line: 2, .. })));
        assert!(parse_spec("problems = Nope").is_err());
        assert!(parse_spec("seeds = 5-2").is_err());
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file = SpecOverrides { dims: Some(vec![10]), seeds: Some(vec![4]), ..Default::default() };
        let flags = SpecOverrides { seeds: Some(vec![9]), ..Default::default() };
        let r = resolve(&[(Source::SpecFile, &file), (Source::Flag, &flags)]).unwrap();
        assert_eq!(r.spec.dims, vec![10]);
        assert_eq!(r.spec.seeds, vec![9]);
        assert_eq!(r.spec.budget_multiplier, 100);
        let src = |k: &str| r.sources.iter().find(|(key, _)| *key == k).unwrap().1;
        assert_eq!(src("dims"), Source::SpecFile);
        assert_eq!(src("seeds"), Source::Flag);
        assert_eq!(src("epsilons"), Source::Default);
        assert!(r.describe().contains("seeds = 9 (flag)"));
    }

    #[test]
    fn odd_dimension_for_myopic_is_rejected() {
        let o = SpecOverrides { dims: Some(vec![7]), ..Default::default() };
        assert!(matches!(resolve(&[(Source::Flag, &o)]), Err(BenchError::Problem(_))));
    }
}
