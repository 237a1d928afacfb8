//! First-order drivers: proximal gradient (ISTA) and FISTA.

use super::trace::{Monitor, NoMonitor, Run, Trace};
use super::{accepts, momentum_point, t_next, Evaluated, OptimizerConfig};
use crate::error::Result;
use crate::hessian::HessianModel;
use crate::linalg::{dot, sub};
use crate::problem::{prox_l1_scaled_identity, CompositeProblem};

/// Backtracks `mu` until `F(p) <= Q_mu(p, base)`. Returns the accepted point
/// and the number of reductions, or `None` past the cap.
fn prox_step(
    problem: &CompositeProblem,
    base: &Evaluated,
    mu: &mut f64,
    config: &OptimizerConfig,
    monotone: bool,
) -> Result<Option<(Evaluated, usize)>> {
    let f_base = base.big_f(problem);
    let mut backtracks = 0;
    loop {
        let v: Vec<f64> = base.x.iter().zip(&base.grad).map(|(x, g)| x - *mu * g).collect();
        let p = prox_l1_scaled_identity(&v, *mu, problem.lambda())?;
        let d = sub(&p, &base.x);
        let gp = problem.g(&p);
        let q = base.f + dot(&base.grad, &d) + dot(&d, &d) / (2.0 * *mu) + gp;
        let f_new = problem.f(&p) + gp;
        if accepts(f_new, f_base, q, 1.0) && (!monotone || f_new <= f_base) {
            return Ok(Some((Evaluated::at(problem, p), backtracks)));
        }
        if backtracks == config.backtrack_cap {
            return Ok(None);
        }
        backtracks += 1;
        *mu *= config.beta;
    }
}

pub fn run_pga(problem: &CompositeProblem, config: &OptimizerConfig) -> Result<Trace> {
    run_pga_with(problem, config, &mut NoMonitor)
}

/// Proximal gradient with backtracking on `mu` and `mu_{k+1}^0 = min(mu_k / beta, mu_max)`.
pub fn run_pga_with(problem: &CompositeProblem, config: &OptimizerConfig, monitor: &mut dyn Monitor) -> Result<Trace> {
    config.validate()?;
    let n = problem.dim();
    let mut cur = Evaluated::at(problem, config.start(n)?);
    let mut mu = config.mu_init;
    let mut run = Run::new(problem, config, "pga", &cur, mu, monitor);
    while run.active() {
        let k = run.next_k();
        let Some((next, backtracks)) = prox_step(problem, &cur, &mut mu, config, true)? else {
            run.fail_backtracking(k);
            break;
        };
        let h = HessianModel::ScaledIdentity { n, coef: 1.0 / mu };
        run.accept(&next, &cur, &h, backtracks, 0, mu, 1.0);
        cur = next;
        mu = (mu / config.beta).min(config.mu_max);
    }
    Ok(run.finish())
}

pub fn run_apga(problem: &CompositeProblem, config: &OptimizerConfig) -> Result<Trace> {
    run_apga_with(problem, config, &mut NoMonitor)
}

/// FISTA with backtracking and a nonincreasing step size.
pub fn run_apga_with(problem: &CompositeProblem, config: &OptimizerConfig, monitor: &mut dyn Monitor) -> Result<Trace> {
    config.validate()?;
    let n = problem.dim();
    let x0 = Evaluated::at(problem, config.start(n)?);
    let mut x_prev = x0.x.clone();
    let mut y = x0.clone();
    let mut t = 1.0;
    let mut mu = config.mu_init;
    let mut run = Run::new(problem, config, "apga", &x0, mu, monitor);
    while run.active() {
        let k = run.next_k();
        let Some((x_k, backtracks)) = prox_step(problem, &y, &mut mu, config, false)? else {
            run.fail_backtracking(k);
            break;
        };
        let h = HessianModel::ScaledIdentity { n, coef: 1.0 / mu };
        run.accept(&x_k, &y, &h, backtracks, 0, mu, t);
        let t_new = t_next(t, 1.0)?;
        y = Evaluated::at(problem, momentum_point(&x_k.x, &x_prev, t, t_new)?);
        x_prev = x_k.x;
        t = t_new;
    }
    Ok(run.finish())
}
