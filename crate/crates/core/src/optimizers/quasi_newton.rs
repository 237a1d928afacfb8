//! Inexact proximal quasi-Newton driver with `H_k = G_k + I / (2 mu_k)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::trace::{Monitor, NoMonitor, Run, Trace};
use super::{accepts, solve_subproblem, Evaluated, OptimizerConfig};
use crate::error::Result;
use crate::hessian::{model_value, CorrectionPairs, DiagLowRank, HessianModel};
use crate::linalg::sub;
use crate::problem::CompositeProblem;

/// Source of `G_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqnaHessian {
    /// Compact L-BFGS from the most recent correction pairs.
    Lbfgs,
    /// L-BFGS for `warmup` iterations, then frozen.
    Fixed { warmup: usize },
    /// `G_k = 0`, which turns the method into proximal gradient with step `2 mu`.
    Zero,
}

impl PqnaHessian {
    fn name(self) -> &'static str {
        match self {
            PqnaHessian::Lbfgs => "pqna-lbfgs",
            PqnaHessian::Fixed { .. } => "pqna-fh",
            PqnaHessian::Zero => "pqna-zero",
        }
    }
}

/// Mutable state of a PQNA run, reused by the fixed-Hessian warmup.
pub(crate) struct PqnaState {
    pub pairs: CorrectionPairs,
    pub mu: f64,
    pub rng: ChaCha8Rng,
}

pub(crate) struct PqnaStep {
    pub next: Evaluated,
    pub hessian: HessianModel,
    pub backtracks: usize,
    pub inner_iters: usize,
}

impl PqnaState {
    pub fn new(config: &OptimizerConfig) -> Self {
        PqnaState {
            pairs: CorrectionPairs::new(config.memory, config.curvature_eps),
            mu: config.mu_init,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        }
    }

    /// One outer iteration from `cur` with the given `G_k`. `None` means the
    /// backtracking cap was exceeded.
    pub fn step(
        &mut self,
        problem: &CompositeProblem,
        config: &OptimizerConfig,
        cur: &Evaluated,
        g_k: Option<&DiagLowRank>,
        k: usize,
    ) -> Result<Option<PqnaStep>> {
        let n = problem.dim();
        let f_old = cur.big_f(problem);
        let mut backtracks = 0;
        let mut inner_iters = 0;
        loop {
            let shift = 1.0 / (2.0 * self.mu);
            let h = match g_k {
                None => HessianModel::ScaledIdentity { n, coef: shift },
                Some(g) => HessianModel::LbfgsCompact(g.shifted(shift)),
            };
            let (p, steps) = solve_subproblem(&h, cur, problem.lambda(), k, config, &mut self.rng)?;
            inner_iters += steps;
            let gp = problem.g(&p);
            let q = model_value(&h, &p, &cur.x, cur.f, &cur.grad, gp)?;
            let f_new = problem.f(&p) + gp;
            if accepts(f_new, f_old, q, config.eta) && f_new <= f_old {
                let next = Evaluated::at(problem, p);
                return Ok(Some(PqnaStep {
                    next,
                    hessian: h,
                    backtracks,
                    inner_iters,
                }));
            }
            if backtracks == config.backtrack_cap {
                return Ok(None);
            }
            backtracks += 1;
            self.mu *= config.beta;
        }
    }

    /// Stores the correction pair of an accepted step.
    pub fn observe(&mut self, from: &Evaluated, to: &Evaluated) -> Result<()> {
        self.pairs.update(&sub(&to.x, &from.x), &sub(&to.grad, &from.grad))?;
        Ok(())
    }

    pub fn grow_mu(&mut self, config: &OptimizerConfig) {
        self.mu = (self.mu / config.beta).min(config.mu_max);
    }
}

pub fn run_pqna(problem: &CompositeProblem, config: &OptimizerConfig, mode: PqnaHessian) -> Result<Trace> {
    run_pqna_with(problem, config, mode, &mut NoMonitor)
}

pub fn run_pqna_with(
    problem: &CompositeProblem,
    config: &OptimizerConfig,
    mode: PqnaHessian,
    monitor: &mut dyn Monitor,
) -> Result<Trace> {
    config.validate()?;
    let n = problem.dim();
    let mut state = PqnaState::new(config);
    let mut cur = Evaluated::at(problem, config.start(n)?);
    let mut frozen = match mode {
        PqnaHessian::Fixed { warmup: 0 } => Some(DiagLowRank::identity(n, 1.0)),
        _ => None,
    };
    let mut run = Run::new(problem, config, mode.name(), &cur, state.mu, monitor);
    while run.active() {
        let k = run.next_k();
        let g_k = match (mode, &frozen) {
            (PqnaHessian::Zero, _) => None,
            (_, Some(f)) => Some(f.clone()),
            _ => Some(state.pairs.compile(n)),
        };
        let Some(step) = state.step(problem, config, &cur, g_k.as_ref(), k)? else {
            run.fail_backtracking(k);
            break;
        };
        run.accept(&step.next, &cur, &step.hessian, step.backtracks, step.inner_iters, state.mu, 1.0);
        if mode != PqnaHessian::Zero && frozen.is_none() {
            state.observe(&cur, &step.next)?;
            if let PqnaHessian::Fixed { warmup } = mode {
                if k == warmup {
                    let base = state.pairs.compile(n);
                    run.trace.base_bounds = Some(base.spectrum_bounds());
                    frozen = Some(base);
                }
            }
        }
        cur = step.next;
        state.grow_mu(config);
    }
    Ok(run.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize_logistic, synthesize_quadratic};
    use crate::linalg::max_abs_diff;
    use crate::optimizers::{run_pga, run_pga_with, IterateRecorder, SubsolverKind};
    use std::sync::Arc;

    #[test]
    fn zero_model_reduces_to_pga() {
        let q = synthesize_quadratic(25, 0.2, 8.0, 4).unwrap();
        let p = CompositeProblem::quadratic(&q, 0.05).unwrap();
        let pga_cfg = OptimizerConfig {
            mu_init: 1.0,
            mu_max: 4.0,
            ..Default::default()
        };
        let pqna_cfg = OptimizerConfig {
            eta: 1.0,
            mu_init: 0.5,
            mu_max: 2.0,
            ..Default::default()
        };
        let mut a = IterateRecorder::default();
        let mut b = IterateRecorder::default();
        let ta = run_pga_with(&p, &pga_cfg, &mut a).unwrap();
        let tb = run_pqna_with(&p, &pqna_cfg, PqnaHessian::Zero, &mut b).unwrap();
        assert_eq!(ta.iterations(), tb.iterations());
        for (x, y) in a.iterates.iter().zip(&b.iterates) {
            assert!(max_abs_diff(x, y) <= 1e-12);
        }
        for (ra, rb) in ta.records.iter().zip(&tb.records) {
            assert_eq!(ra.backtracks, rb.backtracks);
        }
    }

    #[test]
    fn lbfgs_is_monotone_and_matches_pga_optimum() {
        let q = synthesize_quadratic(40, 0.1, 10.0, 2).unwrap();
        let p = CompositeProblem::quadratic(&q, 0.02).unwrap();
        let cfg = OptimizerConfig {
            tol_rel: 1e-7,
            ..Default::default()
        };
        let t = run_pqna(&p, &cfg, PqnaHessian::Lbfgs).unwrap();
        assert!(t.converged(), "{:?}", t.status);
        for w in t.records.windows(2) {
            assert!(w[1].fval <= w[0].fval);
        }
        let r = run_pga(&p, &cfg).unwrap();
        assert!((t.final_fval() - r.final_fval()).abs() < 1e-9);
    }

    #[test]
    fn fixed_mode_freezes_after_warmup() {
        let data = Arc::new(synthesize_logistic(200, 20, 0.3, 5).unwrap());
        let p = CompositeProblem::logistic(data, 1e-3).unwrap();
        let cfg = OptimizerConfig {
            warmup_kbar: 4,
            ..Default::default()
        };
        let mut rec = IterateRecorder::with_hessians();
        let t = run_pqna_with(&p, &cfg, PqnaHessian::Fixed { warmup: 4 }, &mut rec).unwrap();
        assert!(t.converged());
        let (m, big_m) = t.base_bounds.unwrap();
        assert!(0.0 < m && m <= big_m);
        // After the warmup every model shares the same low-rank part.
        let later: Vec<_> = rec.hessians.iter().skip(4).collect();
        let (_, first) = later[0].as_scaled_low_rank();
        for h in &later[1..] {
            let (_, b) = h.as_scaled_low_rank();
            assert_eq!(b.middle(), first.middle());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let data = Arc::new(synthesize_logistic(150, 15, 0.4, 8).unwrap());
        let p = CompositeProblem::logistic(data, 1e-2).unwrap();
        let cfg = OptimizerConfig {
            seed: 77,
            ..Default::default()
        };
        let a = run_pqna(&p, &cfg, PqnaHessian::Lbfgs).unwrap();
        let b = run_pqna(&p, &cfg, PqnaHessian::Lbfgs).unwrap();
        assert!(a.same_ignoring_time(&b));
    }

    #[test]
    fn exact_subsolver_option() {
        let q = synthesize_quadratic(15, 0.5, 4.0, 6).unwrap();
        let p = CompositeProblem::quadratic(&q, 0.1).unwrap();
        let cfg = OptimizerConfig {
            eta: 1.0,
            subsolver: SubsolverKind::Exact { tol: 1e-12 },
            tol_rel: 1e-9,
            ..Default::default()
        };
        let t = run_pqna(&p, &cfg, PqnaHessian::Lbfgs).unwrap();
        assert!(t.converged());
        assert!(t.records.iter().all(|r| r.inner_iters == 0));
    }
}
