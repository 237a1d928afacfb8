//! Experiment descriptions in a flat `key = value` text format.
//!
//! ```text
//! # problem and shared settings
//! dataset = data/a9a
//! lambda = 1e-3
//! output_dir = out/a9a
//! checkpoints = 40, 80
//!
//! [apga]
//!
//! [apqna-fh]
//! warmup = 8
//!
//! [fh-long-warmup]
//! algorithm = apqna-fh
//! warmup = 20
//! ```
//!
//! Keys before the first section apply to every run. A section header names
//! a run; its algorithm is the header itself unless `algorithm` is given.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use crate::dataset::{read_libsvm, synthesize_logistic, synthesize_quadratic, DatasetStats, LibsvmOptions};
use crate::error::{Error, Result};
use crate::optimizers::{Algorithm, OptimizerConfig, SubsolverKind};
use crate::problem::CompositeProblem;

pub const DEFAULT_LAMBDA: f64 = 1e-3;

/// Where the problem data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Libsvm { path: PathBuf, options: LibsvmOptions },
    /// `x^T A x / 2 - b^T x` with the spectrum of `A` spanning `[gamma, l_max]`.
    Quadratic { n: usize, gamma: f64, l_max: f64, seed: u64 },
    Logistic { points: usize, features: usize, density: f64, seed: u64 },
}

/// A problem ready to optimize, with what is known about it.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: CompositeProblem,
    /// Strong convexity modulus of `f`, when known.
    pub gamma: Option<f64>,
    pub stats: Option<DatasetStats>,
    pub description: String,
}

impl ProblemSource {
    /// Parses `quadratic n=50 gamma=0.1 L=10 seed=7` or
    /// `logistic points=1000 features=50 density=0.2 seed=1`.
    pub fn parse_synthetic(text: &str) -> Result<Self> {
        let mut words = text.split_whitespace();
        let kind = words.next().ok_or_else(|| Error::invalid("empty synthetic problem description"))?;
        let mut pairs = Vec::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value in synthetic description, got `{w}`")))?;
            pairs.push((k.to_string(), v.to_string()));
        }
        let get = |key: &str| -> Result<&str> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::invalid(format!("synthetic `{kind}` problem needs `{key}=`")))
        };
        let seed = match pairs.iter().find(|(k, _)| k == "seed") {
            Some((_, v)) => parse_num::<u64>("seed", v)?,
            None => 0,
        };
        let allowed: &[&str] = match kind {
            "quadratic" => &["n", "gamma", "L", "seed"],
            "logistic" => &["points", "features", "density", "seed"],
            _ => return Err(Error::invalid(format!("unknown synthetic problem `{kind}` (quadratic or logistic)"))),
        };
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::invalid(format!("unknown key `{k}` for synthetic `{kind}` problem")));
        }
        Ok(match kind {
            "quadratic" => ProblemSource::Quadratic {
                n: parse_num("n", get("n")?)?,
                gamma: parse_num("gamma", get("gamma")?)?,
                l_max: parse_num("L", get("L")?)?,
                seed,
            },
            _ => ProblemSource::Logistic {
                points: parse_num("points", get("points")?)?,
                features: parse_num("features", get("features")?)?,
                density: parse_num("density", get("density")?)?,
                seed,
            },
        })
    }

    pub fn load(&self, lambda: f64) -> Result<LoadedProblem> {
        match self {
            ProblemSource::Libsvm { path, options } => {
                let data = read_libsvm(path, options)?;
                let stats = data.stats();
                Ok(LoadedProblem {
                    problem: CompositeProblem::logistic(Arc::new(data), lambda)?,
                    gamma: None,
                    stats: Some(stats),
                    description: path.display().to_string(),
                })
            }
            &ProblemSource::Quadratic { n, gamma, l_max, seed } => {
                let q = synthesize_quadratic(n, gamma, l_max, seed)?;
                Ok(LoadedProblem {
                    problem: CompositeProblem::quadratic(&q, lambda)?,
                    gamma: Some(gamma),
                    stats: None,
                    description: format!("quadratic n={n} gamma={gamma} L={l_max} seed={seed}"),
                })
            }
            &ProblemSource::Logistic {
                points,
                features,
                density,
                seed,
            } => {
                let data = synthesize_logistic(points, features, density, seed)?;
                let stats = data.stats();
                Ok(LoadedProblem {
                    problem: CompositeProblem::logistic(Arc::new(data), lambda)?,
                    gamma: None,
                    stats: Some(stats),
                    description: format!("logistic points={points} features={features} density={density} seed={seed}"),
                })
            }
        }
    }
}

/// One configured algorithm run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmRun {
    pub label: String,
    pub algorithm: Algorithm,
    pub config: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: ProblemSource,
    pub lambda: f64,
    pub runs: Vec<AlgorithmRun>,
    pub output_dir: Option<PathBuf>,
    pub checkpoints: Option<Vec<usize>>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            return Err(Error::invalid("experiment needs at least one algorithm"));
        }
        let mut seen = BTreeSet::new();
        for r in &self.runs {
            validate_label(&r.label)?;
            if !seen.insert(r.label.as_str()) {
                return Err(Error::invalid(format!("duplicate run label `{}`", r.label)));
            }
            r.config.validate()?;
        }
        if let Some(c) = &self.checkpoints {
            validate_checkpoints(c)?;
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::invalid("lambda must be >= 0"));
        }
        Ok(())
    }
}

pub fn validate_checkpoints(c: &[usize]) -> Result<()> {
    if c.first() == Some(&0) || c.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("checkpoints must be positive and strictly increasing"));
    }
    Ok(())
}

fn validate_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !label.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "run label `{label}` must be nonempty and use only letters, digits, `-`, `_`, `.`"
        )))
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| Error::invalid(format!("bad value `{value}` for `{key}`: {e}")))
}

pub fn parse_checkpoints(value: &str) -> Result<Vec<usize>> {
    let c = value
        .split(',')
        .map(|s| parse_num::<usize>("checkpoints", s))
        .collect::<Result<Vec<_>>>()?;
    validate_checkpoints(&c)?;
    Ok(c)
}

/// `cd` or `exact:<tol>`.
pub fn parse_subsolver(value: &str) -> Result<SubsolverKind> {
    match value.split_once(':') {
        None if value == "cd" => Ok(SubsolverKind::RandomizedCd),
        Some(("exact", tol)) => Ok(SubsolverKind::Exact {
            tol: parse_num("subsolver", tol)?,
        }),
        _ => Err(Error::invalid(format!("subsolver must be `cd` or `exact:<tol>`, got `{value}`"))),
    }
}

/// Applies one optimizer setting. Returns `false` for unknown keys.
pub fn apply_config_key(cfg: &mut OptimizerConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "eta" => cfg.eta = parse_num(key, value)?,
        "beta" => cfg.beta = parse_num(key, value)?,
        "tol" => cfg.tol_rel = parse_num(key, value)?,
        "max_iters" => cfg.max_outer = parse_num(key, value)?,
        "sigma_growth" => cfg.sigma_growth = parse_num(key, value)?,
        "sigma_init" => cfg.sigma_init = parse_num(key, value)?,
        "warmup" => cfg.warmup_kbar = parse_num(key, value)?,
        "mu_init" => cfg.mu_init = parse_num(key, value)?,
        "mu_max" => cfg.mu_max = parse_num(key, value)?,
        "memory" => cfg.memory = parse_num(key, value)?,
        "curvature_eps" => cfg.curvature_eps = parse_num(key, value)?,
        "domination" => cfg.domination = value.parse()?,
        "inner_cap" => cfg.budget.cap = parse_num(key, value)?,
        "inner_divisor" => cfg.budget.divisor = parse_num(key, value)?,
        "inner_floor" => cfg.budget.floor = parse_num(key, value)?,
        "seed" => cfg.seed = parse_num(key, value)?,
        "backtrack_cap" => cfg.backtrack_cap = parse_num(key, value)?,
        "dense_limit" => cfg.dense_limit = parse_num(key, value)?,
        "subsolver" => cfg.subsolver = parse_subsolver(value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

struct Section {
    label: String,
    line: usize,
    pairs: Vec<(usize, String, String)>,
}

pub fn parse_experiment_spec(text: &str, origin: &str) -> Result<ExperimentSpec> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.into(),
        line,
        msg,
    };
    let mut global: Vec<(usize, String, String)> = Vec::new();
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let label = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "unterminated section header".into()))?
                .trim();
            sections.push(Section {
                label: label.to_string(),
                line: line_no,
                pairs: Vec::new(),
            });
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected `key = value`, got `{line}`")))?;
        let entry = (line_no, k.trim().to_string(), v.trim().to_string());
        match sections.last_mut() {
            Some(s) => s.pairs.push(entry),
            None => global.push(entry),
        }
    }

    let mut base = OptimizerConfig::default();
    let mut lambda = DEFAULT_LAMBDA;
    let mut dataset: Option<PathBuf> = None;
    let mut synthetic: Option<String> = None;
    let mut options = LibsvmOptions::default();
    let mut output_dir = None;
    let mut checkpoints = None;
    for (line, k, v) in &global {
        let at = |e: Error| err(*line, e.to_string());
        match k.as_str() {
            "dataset" => dataset = Some(PathBuf::from(v)),
            "synthetic" => synthetic = Some(v.clone()),
            "positive_class" => options.positive_label = Some(v.clone()),
            "n_features" => options.n_features = Some(parse_num(k, v).map_err(at)?),
            "lambda" => lambda = parse_num(k, v).map_err(at)?,
            "output_dir" => output_dir = Some(PathBuf::from(v)),
            "checkpoints" => checkpoints = Some(parse_checkpoints(v).map_err(at)?),
            _ => {
                if !apply_config_key(&mut base, k, v).map_err(at)? {
                    return Err(err(*line, format!("unknown key `{k}`")));
                }
            }
        }
    }
    let source = match (dataset, synthetic) {
        (Some(path), None) => ProblemSource::Libsvm { path, options },
        (None, Some(s)) => ProblemSource::parse_synthetic(&s).map_err(|e| err(0, e.to_string()))?,
        (Some(_), Some(_)) => return Err(err(0, "give either `dataset` or `synthetic`, not both".into())),
        (None, None) => return Err(err(0, "missing `dataset` or `synthetic`".into())),
    };

    let mut runs = Vec::new();
    for s in sections {
        let mut config = base.clone();
        let mut algorithm = None;
        for (line, k, v) in &s.pairs {
            let at = |e: Error| err(*line, e.to_string());
            if k == "algorithm" {
                algorithm = Some(v.parse::<Algorithm>().map_err(at)?);
            } else if !apply_config_key(&mut config, k, v).map_err(at)? {
                return Err(err(*line, format!("unknown key `{k}` in section [{}]", s.label)));
            }
        }
        let algorithm = match algorithm {
            Some(a) => a,
            None => s.label.parse::<Algorithm>().map_err(|e| err(s.line, e.to_string()))?,
        };
        runs.push(AlgorithmRun {
            label: s.label,
            algorithm,
            config,
        });
    }
    let spec = ExperimentSpec {
        source,
        lambda,
        runs,
        output_dir,
        checkpoints,
    };
    spec.validate().map_err(|e| match e {
        Error::InvalidInput(msg) => err(0, msg),
        other => other,
    })?;
    Ok(spec)
}
