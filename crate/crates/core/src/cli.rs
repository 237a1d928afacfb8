//! Command line front end of the `proxqn` binary.
//!
//! Exit codes: 0 on success, 1 for invalid input, 2 for runtime failures and
//! 3 when the verification suite reports a failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::dataset::LibsvmOptions;
use crate::error::{Error, Result};
use crate::harness::{
    emit_trace_csv, parse_checkpoints, parse_experiment_spec, parse_subsolver, rate_diagnostics, read_trace_csv,
    report_from_trace_files, run_experiment, verify_suite, AcceleratedEnvelope, AlgorithmRun, ProblemSource, RateBounds,
    VerifyLevel, DEFAULT_LAMBDA,
};
use crate::optimizers::{Algorithm, DominationMode, OptimizerConfig};

#[derive(Debug, Parser)]
#[command(name = "proxqn", version, about = "Proximal (quasi-)Newton solvers for l1-regularized problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm on one problem.
    Run(RunArgs),
    /// Run an experiment spec and print the comparison table.
    Compare(CompareArgs),
    /// Run the self-verification suite.
    Verify {
        #[arg(long, default_value = "fast")]
        level: VerifyLevel,
    },
    /// Fit a convergence rate to a trace CSV.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// LIBSVM file for logistic regression.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub dataset: Option<PathBuf>,
    /// Synthetic problem, e.g. "quadratic n=50 gamma=0.1 L=10 seed=7".
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Raw label of the positive class.
    #[arg(long)]
    pub positive_class: Option<String>,
    #[arg(long)]
    pub n_features: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
}

impl ProblemArgs {
    fn source(&self) -> Result<ProblemSource> {
        match (&self.dataset, &self.synthetic) {
            (Some(path), _) => Ok(ProblemSource::Libsvm {
                path: path.clone(),
                options: LibsvmOptions {
                    positive_label: self.positive_class.clone(),
                    n_features: self.n_features,
                },
            }),
            (None, Some(s)) => ProblemSource::parse_synthetic(s),
            (None, None) => Err(Error::invalid("give --dataset or --synthetic")),
        }
    }
}

/// Optimizer settings; anything left out keeps its default.
#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Relative subgradient tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub sigma_growth: Option<f64>,
    #[arg(long)]
    pub sigma_init: Option<f64>,
    /// Warmup iterations before the Hessian is frozen.
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub mu_init: Option<f64>,
    #[arg(long)]
    pub mu_max: Option<f64>,
    #[arg(long)]
    pub memory: Option<usize>,
    #[arg(long)]
    pub curvature_eps: Option<f64>,
    #[arg(long)]
    pub domination: Option<DominationMode>,
    #[arg(long)]
    pub inner_cap: Option<usize>,
    #[arg(long)]
    pub inner_divisor: Option<f64>,
    #[arg(long)]
    pub inner_floor: Option<usize>,
    /// `cd` or `exact:<tol>`.
    #[arg(long)]
    pub subsolver: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub backtrack_cap: Option<usize>,
}

impl ConfigArgs {
    pub fn apply(&self, cfg: &mut OptimizerConfig) -> Result<()> {
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v; })*
            };
        }
        set!(
            eta => cfg.eta,
            beta => cfg.beta,
            tol => cfg.tol_rel,
            max_iters => cfg.max_outer,
            sigma_growth => cfg.sigma_growth,
            sigma_init => cfg.sigma_init,
            warmup => cfg.warmup_kbar,
            mu_init => cfg.mu_init,
            mu_max => cfg.mu_max,
            memory => cfg.memory,
            curvature_eps => cfg.curvature_eps,
            domination => cfg.domination,
            inner_cap => cfg.budget.cap,
            inner_divisor => cfg.budget.divisor,
            inner_floor => cfg.budget.floor,
            seed => cfg.seed,
            backtrack_cap => cfg.backtrack_cap,
        );
        if let Some(s) = &self.subsolver {
            cfg.subsolver = parse_subsolver(s)?;
        }
        cfg.validate()
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value = "apqna-fh")]
    pub algorithm: Algorithm,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Where to write the per-iteration trace CSV.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Experiment spec file.
    pub spec: PathBuf,
    /// Overrides `output_dir` from the spec.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Comma-separated checkpoint iterations, overriding the spec.
    #[arg(long)]
    pub checkpoints: Option<String>,
    /// Rebuild the report from trace files already in the output directory.
    #[arg(long)]
    pub from_traces: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Trace CSV written by `run` or `compare`.
    pub trace: PathBuf,
    /// Reference optimal value.
    #[arg(long)]
    pub fstar: f64,
    /// Check `F_k - F* <= rho^k (F_0 - F*)`.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Check the accelerated envelope with this squared initial distance.
    #[arg(long)]
    pub dist0_sq: Option<f64>,
    /// First iteration of the accelerated phase.
    #[arg(long, default_value_t = 1)]
    pub accel_start: usize,
}

pub fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

/// Runs a parsed command and returns the process exit code.
pub fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Verify { level } => {
            let rep = verify_suite(level);
            println!("{rep}");
            Ok(if rep.all_passed() { 0 } else { 3 })
        }
        Command::Diagnose(args) => cmd_diagnose(args),
    }
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let mut config = OptimizerConfig::default();
    args.config.apply(&mut config)?;
    let loaded = args.problem.source()?.load(args.problem.lambda)?;
    if let Some(s) = &loaded.stats {
        println!(
            "problem: {} ({} points, {} features, {} nonzeros)",
            loaded.description, s.n_points, s.n_features, s.nnz
        );
    } else {
        println!("problem: {}", loaded.description);
    }
    let run = AlgorithmRun {
        label: args.algorithm.name().to_string(),
        algorithm: args.algorithm,
        config,
    };
    let trace = crate::harness::run_labeled(&loaded.problem, &run)?;
    let last = trace.last().copied().expect("traces start with k = 0");
    println!("algorithm: {}", trace.algorithm);
    println!("status: {}", trace.status);
    println!("iterations: {}", trace.iterations());
    println!("final F: {:.10e}", last.fval);
    println!("final subgradient inf-norm: {:.3e}", last.subgrad_inf);
    println!("elapsed: {:.3} s", last.elapsed_sec);
    let nnz = trace.solution.iter().filter(|x| **x != 0.0).count();
    println!("nonzeros in solution: {nnz}/{}", trace.solution.len());
    if let Some(path) = &args.trace_out {
        emit_trace_csv(&trace, path)?;
        println!("trace written to {}", path.display());
    }
    Ok(0)
}

fn cmd_compare(args: CompareArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.spec).map_err(crate::error::io_at(&args.spec))?;
    let mut spec = parse_experiment_spec(&text, &args.spec.display().to_string())?;
    if let Some(dir) = args.output_dir {
        spec.output_dir = Some(dir);
    }
    if let Some(c) = &args.checkpoints {
        spec.checkpoints = Some(parse_checkpoints(c)?);
    }
    let report = if args.from_traces {
        let dir = spec
            .output_dir
            .as_ref()
            .ok_or_else(|| Error::invalid("--from-traces needs an output directory"))?;
        let labels: Vec<String> = spec.runs.iter().map(|r| r.label.clone()).collect();
        report_from_trace_files(dir, &labels, spec.checkpoints.as_deref())?
    } else {
        let (loaded, outcome) = run_experiment(&spec)?;
        println!("problem: {}", loaded.description);
        for (label, t) in &outcome.traces {
            println!("{label}: {} after {} iterations", t.status, t.iterations());
        }
        outcome.report
    };
    print!("{}", report.to_text());
    Ok(0)
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<i32> {
    let records = read_trace_csv(&args.trace)?;
    let bounds = RateBounds {
        linear_rho: args.rho,
        accelerated: args.dist0_sq.map(|dist0_sq| AcceleratedEnvelope {
            dist0_sq,
            start_k: args.accel_start.saturating_sub(1),
        }),
    };
    let rep = rate_diagnostics(&records, args.fstar, &bounds)?;
    match rep.fitted_ratio {
        Some(r) => println!("fitted ratio (tail half): {r:.6}"),
        None => println!("fitted ratio: n/a (objective gap vanished in the tail)"),
    }
    if let Some(flags) = &rep.linear {
        println!("linear envelope: {} of {} iterations violate", rep.linear_violations(), flags.len());
    }
    if let Some(flags) = &rep.accelerated {
        println!(
            "accelerated envelope: {} of {} iterations violate",
            rep.accelerated_violations(),
            flags.len()
        );
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_flags_override_defaults() {
        let cli = Cli::try_parse_from([
            "proxqn",
            "run",
            "--synthetic",
            "quadratic n=5 gamma=1 L=2",
            "--algorithm",
            "pga",
            "--tol",
            "1e-6",
            "--domination",
            "strict",
            "--subsolver",
            "exact:1e-9",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else { panic!() };
        let mut cfg = OptimizerConfig::default();
        args.config.apply(&mut cfg).unwrap();
        assert_eq!(cfg.tol_rel, 1e-6);
        assert_eq!(cfg.domination, DominationMode::Strict);
        assert_eq!(args.algorithm, Algorithm::Pga);
    }

    #[test]
    fn dataset_and_synthetic_are_exclusive() {
        assert!(Cli::try_parse_from(["proxqn", "run", "--dataset", "a", "--synthetic", "b"]).is_err());
        assert!(Cli::try_parse_from(["proxqn", "run"]).is_err());
    }

    #[test]
    fn invalid_config_is_a_validation_error() {
        let cfg_args = ConfigArgs {
            beta: Some(1.5),
            ..Default::default()
        };
        let e = cfg_args.apply(&mut OptimizerConfig::default()).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}
