//! Running experiments: one thread per algorithm over a shared problem.

use std::fs;
use std::path::{Path, PathBuf};

use super::csv::{emit_trace_csv, read_trace_csv};
use super::report::ComparisonReport;
use super::spec::{AlgorithmRun, ExperimentSpec, LoadedProblem};
use crate::error::{Error, Result};
use crate::optimizers::{run_algorithm, run_pqna, OptimizerConfig, PqnaHessian, Trace};
use crate::problem::CompositeProblem;

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub traces: Vec<(String, Trace)>,
    pub report: ComparisonReport,
}

impl ExperimentOutcome {
    pub fn trace(&self, label: &str) -> Option<&Trace> {
        self.traces.iter().find(|(l, _)| l == label).map(|(_, t)| t)
    }
}

/// Runs one configured algorithm, attaching its label to any error.
pub fn run_labeled(problem: &CompositeProblem, run: &AlgorithmRun) -> Result<Trace> {
    let wrap = |e: Error| Error::Algorithm {
        algorithm: run.label.clone(),
        source: Box::new(e),
    };
    let trace = run_algorithm(run.algorithm, problem, &run.config).map_err(wrap)?;
    trace.into_result(run.config.backtrack_cap).map_err(wrap)
}

/// Runs every algorithm concurrently and assembles the report.
pub fn run_on_problem(
    problem: &CompositeProblem,
    runs: &[AlgorithmRun],
    checkpoints: Option<&[usize]>,
) -> Result<ExperimentOutcome> {
    if runs.is_empty() {
        return Err(Error::invalid("experiment needs at least one algorithm"));
    }
    let results: Vec<Result<Trace>> = std::thread::scope(|scope| {
        let handles: Vec<_> = runs
            .iter()
            .map(|run| scope.spawn(move || run_labeled(problem, run)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("optimizer thread panicked"))
            .collect()
    });
    let mut traces = Vec::with_capacity(runs.len());
    for (run, res) in runs.iter().zip(results) {
        let trace = res?;
        log::info!(
            "{}: {} after {} iterations, F = {:.6e}",
            run.label,
            trace.status,
            trace.iterations(),
            trace.final_fval()
        );
        traces.push((run.label.clone(), trace));
    }
    let report = build_report(&traces, checkpoints)?;
    Ok(ExperimentOutcome { traces, report })
}

fn build_report(traces: &[(String, Trace)], checkpoints: Option<&[usize]>) -> Result<ComparisonReport> {
    let runs: Vec<_> = traces.iter().map(|(l, t)| (l.clone(), t.records.clone())).collect();
    ComparisonReport::build(&runs, checkpoints)
}

/// Loads the problem, runs everything and writes traces and reports when the
/// spec names an output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(LoadedProblem, ExperimentOutcome)> {
    spec.validate()?;
    let loaded = spec.source.load(spec.lambda)?;
    let outcome = run_on_problem(&loaded.problem, &spec.runs, spec.checkpoints.as_deref())?;
    if let Some(dir) = &spec.output_dir {
        write_outputs(dir, &outcome)?;
    }
    Ok((loaded, outcome))
}

pub fn trace_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("{label}.csv"))
}

/// Writes `<label>.csv` per run plus `report.txt` and `report.csv`.
pub fn write_outputs(dir: &Path, outcome: &ExperimentOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (label, trace) in &outcome.traces {
        emit_trace_csv(trace, trace_path(dir, label))?;
    }
    fs::write(dir.join("report.txt"), outcome.report.to_text())?;
    fs::write(dir.join("report.csv"), outcome.report.to_csv())?;
    Ok(())
}

/// Rebuilds a report from trace files written by [`write_outputs`].
pub fn report_from_trace_files(dir: &Path, labels: &[String], checkpoints: Option<&[usize]>) -> Result<ComparisonReport> {
    let runs = labels
        .iter()
        .map(|l| Ok((l.clone(), read_trace_csv(trace_path(dir, l))?)))
        .collect::<Result<Vec<_>>>()?;
    ComparisonReport::build(&runs, checkpoints)
}

/// Reference optimum: PQNA-LBFGS at a tenth of the configured tolerance.
pub fn reference_fstar(problem: &CompositeProblem, config: &OptimizerConfig) -> Result<f64> {
    let cfg = OptimizerConfig {
        tol_rel: config.tol_rel / 10.0,
        ..config.clone()
    };
    let trace = run_pqna(problem, &cfg, PqnaHessian::Lbfgs)?.into_result(cfg.backtrack_cap)?;
    Ok(trace.records.iter().map(|r| r.fval).fold(f64::INFINITY, f64::min))
}

/// Upper bound on `F(x) - F*` from the final subgradient under
/// `gamma`-strong convexity: `||s||_2^2 / (2 gamma) <= n ||s||_inf^2 / (2 gamma)`.
/// `None` when `gamma` is zero.
pub fn tolerance_gap(n: usize, subgrad_inf: f64, gamma: f64) -> Option<f64> {
    (gamma > 0.0).then(|| n as f64 * subgrad_inf * subgrad_inf / (2.0 * gamma))
}
