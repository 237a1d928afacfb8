//! Accelerated proximal quasi-Newton drivers: the general scheme with a
//! pluggable Hessian source, and the fixed-Hessian variant `H_k = H / sigma_k`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::quasi_newton::PqnaState;
use super::trace::{Monitor, NoMonitor, Run, Trace};
use super::{
    accepts, momentum_point, solve_subproblem, t_next, DominationMode, Evaluated, OptimizerConfig, SIGMA_FLOOR,
};
use crate::error::{Error, Result};
use crate::hessian::{enforce_domination, model_value, CorrectionPairs, DiagLowRank, HessianModel};
use crate::linalg::sub;
use crate::problem::CompositeProblem;

/// Supplies the initial guess for `H_k` at each accelerated iteration.
pub trait HessianSource {
    /// `H_0`, against which `sigma_1 H_1` is dominated in strict mode.
    /// `None` leaves the first iteration unconstrained.
    fn initial(&mut self, _n: usize) -> Option<HessianModel> {
        None
    }

    /// Initial `H_k`, given the accepted `H_{k-1}` (absent at `k = 1`).
    fn propose(&mut self, k: usize, prev: Option<&HessianModel>) -> Result<HessianModel>;

    /// Accepted step `s = x_k - x_{k-1}` with `y = grad f(x_k) - grad f(x_{k-1})`.
    fn observe(&mut self, _s: &[f64], _y: &[f64]) -> Result<()> {
        Ok(())
    }
}

/// Compact L-BFGS from the latest correction pairs.
pub struct LbfgsSource {
    n: usize,
    pairs: CorrectionPairs,
}

impl LbfgsSource {
    pub fn new(n: usize, memory: usize, curvature_eps: f64) -> Self {
        LbfgsSource {
            n,
            pairs: CorrectionPairs::new(memory, curvature_eps),
        }
    }
}

impl HessianSource for LbfgsSource {
    fn propose(&mut self, _k: usize, _prev: Option<&HessianModel>) -> Result<HessianModel> {
        Ok(HessianModel::LbfgsCompact(self.pairs.compile(self.n)))
    }

    fn observe(&mut self, s: &[f64], y: &[f64]) -> Result<()> {
        self.pairs.update(s, y).map(|_| ())
    }
}

/// The same matrix every iteration.
pub struct FixedSource(pub HessianModel);

impl HessianSource for FixedSource {
    fn propose(&mut self, _k: usize, _prev: Option<&HessianModel>) -> Result<HessianModel> {
        Ok(self.0.clone())
    }
}

/// Starts each iteration from the previously accepted matrix, so
/// backtracking inflation persists like a nonincreasing step size.
pub struct CarryOverSource(pub HessianModel);

impl HessianSource for CarryOverSource {
    fn propose(&mut self, _k: usize, prev: Option<&HessianModel>) -> Result<HessianModel> {
        Ok(prev.cloned().unwrap_or_else(|| self.0.clone()))
    }
}

/// `H_k = even` for even `k` and `odd` for odd `k`, with `H_0 = even`.
pub struct AlternatingSource {
    pub even: HessianModel,
    pub odd: HessianModel,
}

impl HessianSource for AlternatingSource {
    fn initial(&mut self, _n: usize) -> Option<HessianModel> {
        Some(self.even.clone())
    }

    fn propose(&mut self, k: usize, _prev: Option<&HessianModel>) -> Result<HessianModel> {
        Ok(if k % 2 == 0 { self.even.clone() } else { self.odd.clone() })
    }
}

/// History needed to rebuild `t_k` and `y_k` whenever `sigma_k` changes.
struct Momentum {
    /// `x_{k-1}`, evaluated.
    last: Evaluated,
    /// `x_{k-2}`.
    before: Vec<f64>,
    t_prev: f64,
    sigma_prev: f64,
    /// Accelerated iterations completed so far.
    done: usize,
    sum_sqrt_sigma: f64,
}

impl Momentum {
    fn new(start: Evaluated, sigma0: f64) -> Self {
        let before = start.x.clone();
        Momentum {
            last: start,
            before,
            t_prev: 1.0,
            sigma_prev: sigma0,
            done: 0,
            sum_sqrt_sigma: 0.0,
        }
    }

    /// `(t_k, y_k)` for the current `theta_{k-1}`.
    fn point(&self, problem: &CompositeProblem, theta: f64) -> Result<(f64, Evaluated)> {
        if self.done == 0 {
            return Ok((1.0, self.last.clone()));
        }
        let t = t_next(self.t_prev, theta)?;
        let y = momentum_point(&self.last.x, &self.before, self.t_prev, t)?;
        if y == self.last.x {
            return Ok((t, self.last.clone()));
        }
        Ok((t, Evaluated::at(problem, y)))
    }

    /// Records the accepted `x_k`; returns whether `sigma_k t_k^2 >= (sum sqrt(sigma_i) / 2)^2` held.
    fn advance(&mut self, x_k: Evaluated, t: f64, sigma: f64) -> bool {
        self.sum_sqrt_sigma += sigma.sqrt();
        let rhs = 0.25 * self.sum_sqrt_sigma * self.sum_sqrt_sigma;
        let ok = sigma * t * t >= rhs * (1.0 - 1e-10);
        self.before = std::mem::replace(&mut self.last, x_k).x;
        self.t_prev = t;
        self.sigma_prev = sigma;
        self.done += 1;
        ok
    }
}

fn check_sigma(sigma: f64, k: usize) -> Result<()> {
    if sigma < SIGMA_FLOOR {
        return Err(Error::SigmaUnderflow { iteration: k, sigma });
    }
    Ok(())
}

pub fn run_apqna(problem: &CompositeProblem, config: &OptimizerConfig) -> Result<Trace> {
    let mut source = LbfgsSource::new(problem.dim(), config.memory, config.curvature_eps);
    let mut trace = run_apqna_with(problem, config, &mut source, &mut NoMonitor)?;
    trace.algorithm = "apqna-lbfgs".into();
    Ok(trace)
}

/// General accelerated scheme. Strict mode keeps `sigma_k H_k` nonincreasing
/// in the Loewner order, shrinking `sigma_k` to the largest feasible value
/// and rebuilding `t_k`, `y_k` from `theta_{k-1} = sigma_{k-1} / sigma_k`.
/// Relaxed mode fixes `theta = 1` and only inflates `H_k` on backtracking.
pub fn run_apqna_with(
    problem: &CompositeProblem,
    config: &OptimizerConfig,
    source: &mut dyn HessianSource,
    monitor: &mut dyn Monitor,
) -> Result<Trace> {
    config.validate()?;
    let n = problem.dim();
    let strict = config.domination == DominationMode::Strict;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x0 = Evaluated::at(problem, config.start(n)?);
    let mut run = Run::new(problem, config, "apqna", &x0, config.sigma_init, monitor);
    run.trace.accel_start = Some(1);
    let mut mom = Momentum::new(x0, config.sigma_init);
    let mut h_prev = source.initial(n);
    let mut accepted: Option<HessianModel> = None;
    let dominate = |h: &HessianModel, sigma: f64, h_prev: &Option<HessianModel>, sigma_prev: f64| -> Result<f64> {
        match h_prev {
            Some(hp) if strict => Ok(sigma.min(enforce_domination(h, sigma_prev, hp, config.dense_limit)?)),
            _ => Ok(sigma),
        }
    };
    while run.active() {
        let k = run.next_k();
        let mut h = source.propose(k, accepted.as_ref())?;
        let sigma0 = if mom.done == 0 {
            config.sigma_init
        } else {
            config.sigma_growth * mom.sigma_prev
        };
        let mut sigma = dominate(&h, sigma0, &h_prev, mom.sigma_prev)?;
        let theta = |sigma: f64| if strict { mom.sigma_prev / sigma } else { 1.0 };
        let (mut t, mut y) = mom.point(problem, theta(sigma))?;
        let mut backtracks = 0;
        let mut inner_iters = 0;
        let x_k = loop {
            check_sigma(sigma, k)?;
            let (p, steps) = solve_subproblem(&h, &y, problem.lambda(), k, config, &mut rng)?;
            inner_iters += steps;
            let gp = problem.g(&p);
            let q = model_value(&h, &p, &y.x, y.f, &y.grad, gp)?;
            let f_new = problem.f(&p) + gp;
            if accepts(f_new, y.big_f(problem), q, 1.0) {
                break Some(Evaluated::at(problem, p));
            }
            if backtracks == config.backtrack_cap {
                break None;
            }
            backtracks += 1;
            h = h.inflate(config.beta);
            if strict {
                sigma = if h_prev.is_some() {
                    dominate(&h, sigma, &h_prev, mom.sigma_prev)?
                } else {
                    sigma * config.beta
                };
                (t, y) = mom.point(problem, theta(sigma))?;
            }
        };
        let Some(x_k) = x_k else {
            run.fail_backtracking(k);
            break;
        };
        run.accept(&x_k, &y, &h, backtracks, inner_iters, sigma, t);
        source.observe(&sub(&x_k.x, &mom.last.x), &sub(&x_k.grad, &mom.last.grad))?;
        if !mom.advance(x_k, t, sigma) {
            run.trace.momentum_violations += 1;
        }
        h_prev = Some(h.clone());
        accepted = Some(h);
    }
    Ok(run.finish())
}

pub fn run_apqna_fh(problem: &CompositeProblem, config: &OptimizerConfig) -> Result<Trace> {
    run_apqna_fh_with(problem, config, None, &mut NoMonitor)
}

/// Fixed-Hessian accelerated scheme. The first `warmup_kbar` iterations run
/// PQNA with L-BFGS; the resulting matrix (or `base`, when given) is frozen
/// and the accelerated phase restarts its momentum from the warmup point.
/// With no warmup and no `base` the matrix is the identity.
pub fn run_apqna_fh_with(
    problem: &CompositeProblem,
    config: &OptimizerConfig,
    base: Option<DiagLowRank>,
    monitor: &mut dyn Monitor,
) -> Result<Trace> {
    config.validate()?;
    let n = problem.dim();
    let mut state = PqnaState::new(config);
    let mut cur = Evaluated::at(problem, config.start(n)?);
    let mut run = Run::new(problem, config, "apqna-fh", &cur, config.sigma_init, monitor);
    while run.active() && run.next_k() <= config.warmup_kbar {
        let k = run.next_k();
        let g_k = state.pairs.compile(n);
        let Some(step) = state.step(problem, config, &cur, Some(&g_k), k)? else {
            run.fail_backtracking(k);
            return Ok(run.finish());
        };
        run.accept(&step.next, &cur, &step.hessian, step.backtracks, step.inner_iters, state.mu, 1.0);
        state.observe(&cur, &step.next)?;
        cur = step.next;
        state.grow_mu(config);
    }
    let base = match base {
        Some(b) => {
            crate::error::check_dim(n, b.dim())?;
            b
        }
        None if config.warmup_kbar == 0 => DiagLowRank::identity(n, 1.0),
        None => state.pairs.compile(n),
    };
    run.trace.base_bounds = Some(base.spectrum_bounds());
    if !run.active() {
        return Ok(run.finish());
    }
    run.trace.accel_start = Some(run.next_k());
    let mut rng = state.rng;
    let mut mom = Momentum::new(cur, config.sigma_init);
    while run.active() {
        let k = run.next_k();
        let mut sigma = if mom.done == 0 {
            config.sigma_init
        } else {
            config.sigma_growth * mom.sigma_prev
        };
        let (mut t, mut y) = mom.point(problem, mom.sigma_prev / sigma)?;
        let mut backtracks = 0;
        let mut inner_iters = 0;
        let accepted = loop {
            check_sigma(sigma, k)?;
            let h = HessianModel::ScaledFixed {
                sigma,
                base: base.clone(),
            };
            let (p, steps) = solve_subproblem(&h, &y, problem.lambda(), k, config, &mut rng)?;
            inner_iters += steps;
            let gp = problem.g(&p);
            let q = model_value(&h, &p, &y.x, y.f, &y.grad, gp)?;
            let f_new = problem.f(&p) + gp;
            if accepts(f_new, y.big_f(problem), q, 1.0) {
                break Some((Evaluated::at(problem, p), h));
            }
            if backtracks == config.backtrack_cap {
                break None;
            }
            backtracks += 1;
            sigma *= config.beta;
            (t, y) = mom.point(problem, mom.sigma_prev / sigma)?;
        };
        let Some((x_k, h)) = accepted else {
            run.fail_backtracking(k);
            break;
        };
        run.accept(&x_k, &y, &h, backtracks, inner_iters, sigma, t);
        if !mom.advance(x_k, t, sigma) {
            run.trace.momentum_violations += 1;
        }
    }
    Ok(run.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize_logistic, synthesize_quadratic};
    use crate::hessian::diagonal_model;
    use crate::linalg::max_abs_diff;
    use crate::optimizers::{run_apga_with, IterateRecorder, Status, SubsolverKind};
    use crate::problem::QuadraticLoss;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn scaled_quadratic(n: usize, scale: f64, seed: u64, lambda: f64) -> CompositeProblem {
        let q = synthesize_quadratic(n, 0.1 * scale, scale, seed).unwrap();
        CompositeProblem::quadratic(&q, lambda).unwrap()
    }

    fn assert_same_iterates(a: &IterateRecorder, b: &IterateRecorder) {
        assert_eq!(a.iterates.len(), b.iterates.len());
        for (x, y) in a.iterates.iter().zip(&b.iterates) {
            assert!(max_abs_diff(x, y) <= 1e-12, "{}", max_abs_diff(x, y));
        }
    }

    #[test]
    fn identity_strict_matches_apga_without_backtracking() {
        let p = scaled_quadratic(20, 0.9, 3, 0.01);
        let cfg = OptimizerConfig {
            domination: DominationMode::Strict,
            ..Default::default()
        };
        let (mut a, mut b) = (IterateRecorder::default(), IterateRecorder::default());
        let ta = run_apga_with(&p, &cfg, &mut a).unwrap();
        let mut src = CarryOverSource(HessianModel::identity(20));
        let tb = run_apqna_with(&p, &cfg, &mut src, &mut b).unwrap();
        assert_eq!(ta.iterations(), tb.iterations());
        assert_same_iterates(&a, &b);
    }

    #[test]
    fn identity_relaxed_matches_apga_with_backtracking() {
        let p = scaled_quadratic(20, 12.0, 5, 0.05);
        let cfg = OptimizerConfig::default();
        let (mut a, mut b) = (IterateRecorder::default(), IterateRecorder::default());
        let ta = run_apga_with(&p, &cfg, &mut a).unwrap();
        assert!(ta.records.iter().any(|r| r.backtracks > 0));
        let mut src = CarryOverSource(HessianModel::identity(20));
        let tb = run_apqna_with(&p, &cfg, &mut src, &mut b).unwrap();
        assert_same_iterates(&a, &b);
        for (ra, rb) in ta.records.iter().zip(&tb.records) {
            assert_eq!(ra.backtracks, rb.backtracks);
            assert_eq!(ra.t_k, rb.t_k);
        }
    }

    #[test]
    fn base_identity_fh_matches_apga_without_growth() {
        let p = scaled_quadratic(15, 0.8, 7, 0.02);
        let cfg = OptimizerConfig {
            warmup_kbar: 0,
            sigma_growth: 1.0,
            ..Default::default()
        };
        let (mut a, mut b) = (IterateRecorder::default(), IterateRecorder::default());
        run_apga_with(&p, &cfg, &mut a).unwrap();
        let tb = run_apqna_fh_with(&p, &cfg, None, &mut b).unwrap();
        assert_eq!(tb.accel_start, Some(1));
        assert_same_iterates(&a, &b);
    }

    #[test]
    fn alternating_diagonals_shrink_sigma_tenfold() {
        let loss = QuadraticLoss::new(DMatrix::identity(2, 2) * 0.5, vec![1.0, -2.0]).unwrap();
        let p = CompositeProblem::new(Arc::new(loss), 0.0).unwrap();
        let cfg = OptimizerConfig {
            domination: DominationMode::Strict,
            subsolver: SubsolverKind::Exact { tol: 1e-14 },
            tol_rel: 0.0,
            max_outer: 40,
            ..Default::default()
        };
        let mut src = AlternatingSource {
            even: diagonal_model(&[10.0, 1.0]).unwrap(),
            odd: diagonal_model(&[1.0, 10.0]).unwrap(),
        };
        let tr = run_apqna_with(&p, &cfg, &mut src, &mut NoMonitor).unwrap();
        assert!(tr.iterations() >= 10);
        for r in &tr.records[1..] {
            let expect = 10f64.powi(-(r.k as i32));
            assert_eq!(r.backtracks, 0);
            assert!((r.step_scalar - expect).abs() <= 1e-12 * expect, "k={} {}", r.k, r.step_scalar);
        }
    }

    #[test]
    fn sigma_underflow_is_an_error() {
        let loss = QuadraticLoss::new(DMatrix::identity(2, 2) * 0.5, vec![1.0, -2.0]).unwrap();
        let p = CompositeProblem::new(Arc::new(loss), 0.0).unwrap();
        let cfg = OptimizerConfig {
            domination: DominationMode::Strict,
            subsolver: SubsolverKind::Exact { tol: 1e-14 },
            tol_rel: 0.0,
            max_outer: 400,
            ..Default::default()
        };
        let mut src = AlternatingSource {
            even: diagonal_model(&[10.0, 1.0]).unwrap(),
            odd: diagonal_model(&[1.0, 10.0]).unwrap(),
        };
        match run_apqna_with(&p, &cfg, &mut src, &mut NoMonitor) {
            Err(Error::SigmaUnderflow { iteration, .. }) => assert!(iteration > 290),
            Ok(t) => assert!(t.converged(), "run ended with {:?}", t.status),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn fixed_hessian_invariants_on_logistic() {
        let data = Arc::new(synthesize_logistic(300, 25, 0.3, 4).unwrap());
        let p = CompositeProblem::logistic(data, 1e-3).unwrap();
        let cfg = OptimizerConfig::default();
        let tr = run_apqna_fh(&p, &cfg).unwrap();
        assert!(tr.converged(), "{:?}", tr.status);
        assert_eq!(tr.accel_start, Some(cfg.warmup_kbar + 1));
        assert_eq!(tr.momentum_violations, 0);
        let (m, _) = tr.base_bounds.unwrap();
        let l = p.smooth().lipschitz_bound().unwrap();
        let floor = (cfg.beta * m / l).min(cfg.sigma_init);
        for r in &tr.records[cfg.warmup_kbar + 1..] {
            assert!(r.step_scalar >= floor * (1.0 - 1e-12));
        }
    }

    #[test]
    fn lbfgs_relaxed_converges() {
        let data = Arc::new(synthesize_logistic(300, 25, 0.3, 6).unwrap());
        let p = CompositeProblem::logistic(data, 1e-3).unwrap();
        let tr = run_apqna(&p, &OptimizerConfig::default()).unwrap();
        assert_eq!(tr.status, Status::Converged);
        assert_eq!(tr.algorithm, "apqna-lbfgs");
    }

    #[test]
    fn strict_lbfgs_keeps_domination() {
        let p = scaled_quadratic(12, 4.0, 2, 0.01);
        let cfg = OptimizerConfig {
            domination: DominationMode::Strict,
            max_outer: 30,
            ..Default::default()
        };
        let mut src = LbfgsSource::new(12, cfg.memory, cfg.curvature_eps);
        let mut rec = IterateRecorder::with_hessians();
        let tr = run_apqna_with(&p, &cfg, &mut src, &mut rec).unwrap();
        assert_eq!(tr.momentum_violations, 0);
        for (i, w) in rec.hessians.windows(2).enumerate() {
            let (s0, s1) = (tr.records[i + 1].step_scalar, tr.records[i + 2].step_scalar);
            let diff = w[0].to_dense() * s0 - w[1].to_dense() * s1;
            let lo = diff.symmetric_eigenvalues().min();
            assert!(lo >= -1e-9 * s0, "iteration {}: {lo}", i + 2);
        }
    }
}
