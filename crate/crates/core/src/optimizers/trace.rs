use std::fmt;
use std::time::Instant;

use super::{Evaluated, OptimizerConfig};
use crate::error::{Error, Result};
use crate::hessian::HessianModel;
use crate::problem::CompositeProblem;

/// One accepted iterate. `k = 0` is the starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub k: usize,
    pub fval: f64,
    pub subgrad_inf: f64,
    pub backtracks: usize,
    pub inner_iters: usize,
    /// `mu_k` for the proximal gradient and PQNA drivers, `sigma_k` for APQNA.
    pub step_scalar: f64,
    pub t_k: f64,
    pub elapsed_sec: f64,
}

impl Record {
    pub fn same_ignoring_time(&self, other: &Record) -> bool {
        Record { elapsed_sec: 0.0, ..*self } == Record { elapsed_sec: 0.0, ..*other }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    BacktrackFailure { iteration: usize },
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Converged => f.write_str("converged"),
            Status::MaxIter => f.write_str("max_iter"),
            Status::BacktrackFailure { iteration } => write!(f, "backtrack_failure at iteration {iteration}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub algorithm: String,
    pub records: Vec<Record>,
    pub status: Status,
    /// Last accepted iterate.
    pub solution: Vec<f64>,
    /// `k` of the first accelerated iterate, after any warmup.
    pub accel_start: Option<usize>,
    /// Iterations where `sigma_k t_k^2 >= (sum sqrt(sigma_i) / 2)^2` failed.
    pub momentum_violations: usize,
    /// Extreme eigenvalues of the frozen base matrix, when one exists.
    pub base_bounds: Option<(f64, f64)>,
}

impl Trace {
    pub fn empty(algorithm: impl Into<String>) -> Self {
        Trace {
            algorithm: algorithm.into(),
            records: Vec::new(),
            status: Status::MaxIter,
            solution: Vec::new(),
            accel_start: None,
            momentum_violations: 0,
            base_bounds: None,
        }
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    /// Number of outer iterations performed.
    pub fn iterations(&self) -> usize {
        self.last().map_or(0, |r| r.k)
    }

    pub fn final_fval(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.fval)
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    /// Turns a backtracking failure into an error.
    pub fn into_result(self, cap: usize) -> Result<Trace> {
        match self.status {
            Status::BacktrackFailure { iteration } => Err(Error::BacktrackFailure { iteration, cap }),
            _ => Ok(self),
        }
    }

    pub fn fvals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.fval).collect()
    }

    pub fn same_ignoring_time(&self, other: &Trace) -> bool {
        self.status == other.status
            && self.solution == other.solution
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| a.same_ignoring_time(b))
    }
}

/// What a driver exposes about each accepted iterate.
pub struct IterateView<'a> {
    pub k: usize,
    pub x: &'a [f64],
    /// Point the model was built at: `x_{k-1}` or the momentum point `y_k`.
    pub base: &'a [f64],
    pub f_base: f64,
    pub grad_base: &'a [f64],
    /// Accepted `H_k`.
    pub hessian: &'a HessianModel,
    pub record: &'a Record,
}

/// Observer hook for instrumentation.
pub trait Monitor {
    fn observe(&mut self, view: &IterateView<'_>);
}

pub struct NoMonitor;

impl Monitor for NoMonitor {
    fn observe(&mut self, _: &IterateView<'_>) {}
}

/// Keeps every iterate and, optionally, every accepted Hessian.
#[derive(Default)]
pub struct IterateRecorder {
    pub keep_hessians: bool,
    pub iterates: Vec<Vec<f64>>,
    pub bases: Vec<Vec<f64>>,
    pub hessians: Vec<HessianModel>,
}

impl IterateRecorder {
    pub fn with_hessians() -> Self {
        IterateRecorder {
            keep_hessians: true,
            ..Default::default()
        }
    }
}

impl Monitor for IterateRecorder {
    fn observe(&mut self, view: &IterateView<'_>) {
        self.iterates.push(view.x.to_vec());
        self.bases.push(view.base.to_vec());
        if self.keep_hessians {
            self.hessians.push(view.hessian.clone());
        }
    }
}

/// Bookkeeping shared by all drivers.
pub(crate) struct Run<'a> {
    problem: &'a CompositeProblem,
    tol_rel: f64,
    max_outer: usize,
    start: Instant,
    s0: f64,
    pub trace: Trace,
    monitor: &'a mut dyn Monitor,
}

impl<'a> Run<'a> {
    pub fn new(
        problem: &'a CompositeProblem,
        config: &OptimizerConfig,
        name: &str,
        x0: &Evaluated,
        step0: f64,
        monitor: &'a mut dyn Monitor,
    ) -> Self {
        let s0 = problem.subgrad_inf(&x0.x, &x0.grad);
        let mut trace = Trace::empty(name);
        trace.records.push(Record {
            k: 0,
            fval: x0.big_f(problem),
            subgrad_inf: s0,
            backtracks: 0,
            inner_iters: 0,
            step_scalar: step0,
            t_k: 1.0,
            elapsed_sec: 0.0,
        });
        trace.solution = x0.x.clone();
        trace.status = if s0 == 0.0 { Status::Converged } else { Status::MaxIter };
        Run {
            problem,
            tol_rel: config.tol_rel,
            max_outer: config.max_outer,
            start: Instant::now(),
            s0,
            trace,
            monitor,
        }
    }

    /// True while the driver should keep iterating.
    pub fn active(&self) -> bool {
        self.trace.status == Status::MaxIter && self.trace.iterations() < self.max_outer
    }

    pub fn next_k(&self) -> usize {
        self.trace.iterations() + 1
    }

    pub fn fail_backtracking(&mut self, k: usize) {
        log::warn!("{}: backtracking cap hit at iteration {k}", self.trace.algorithm);
        self.trace.status = Status::BacktrackFailure { iteration: k };
    }

    /// Logs the accepted iterate `x` (evaluated) and checks termination.
    #[allow(clippy::too_many_arguments)]
    pub fn accept(
        &mut self,
        x: &Evaluated,
        base: &Evaluated,
        hessian: &HessianModel,
        backtracks: usize,
        inner_iters: usize,
        step_scalar: f64,
        t_k: f64,
    ) {
        let k = self.next_k();
        let s = self.problem.subgrad_inf(&x.x, &x.grad);
        let record = Record {
            k,
            fval: x.big_f(self.problem),
            subgrad_inf: s,
            backtracks,
            inner_iters,
            step_scalar,
            t_k,
            elapsed_sec: self.start.elapsed().as_secs_f64(),
        };
        self.monitor.observe(&IterateView {
            k,
            x: &x.x,
            base: &base.x,
            f_base: base.f,
            grad_base: &base.grad,
            hessian,
            record: &record,
        });
        log::trace!("{} k={k} F={:.12e} subgrad={s:.3e}", self.trace.algorithm, record.fval);
        self.trace.records.push(record);
        self.trace.solution.clone_from(&x.x);
        if s <= self.tol_rel * self.s0 {
            self.trace.status = Status::Converged;
        }
    }

    pub fn finish(self) -> Trace {
        if let Some(r) = self.trace.records.last() {
            log::debug!(
                "{} finished: {} after {} iterations, F={:.10e}",
                self.trace.algorithm,
                self.trace.status,
                r.k,
                r.fval
            );
        }
        self.trace
    }
}
