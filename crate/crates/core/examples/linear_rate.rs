//! Linear convergence of PQNA on a strongly convex quadratic with an l1 term:
//! the observed objective gaps against `rho^k` with
//! `rho = 1 - gamma / (gamma + M)`.

use proxqn::harness::{linear_rate_check, rate_diagnostics, RateBounds};
use proxqn::dataset::synthesize_quadratic;
use proxqn::optimizers::{run_pga, OptimizerConfig};
use proxqn::oracles::dense_lasso_quadratic;
use proxqn::problem::CompositeProblem;

fn main() -> proxqn::Result<()> {
    for seed in 0..3 {
        let c = linear_rate_check(seed)?;
        println!(
            "seed {seed}: M_est = {:.3}, rho = {:.5}, {} iterations, {} violations",
            c.m_est, c.rho, c.iterations, c.violations
        );
    }

    // Fitted ratio of plain proximal gradient on the same kind of instance.
    let q = synthesize_quadratic(50, 0.1, 10.0, 0)?;
    let p = CompositeProblem::quadratic(&q, 1e-2)?;
    let xs = dense_lasso_quadratic(&q.matrix, &q.b, 1e-2, 1_000_000);
    let trace = run_pga(&p, &OptimizerConfig { tol_rel: 1e-7, ..Default::default() })?;
    let rep = rate_diagnostics(&trace.records, p.value(&xs).min(trace.final_fval()), &RateBounds::default())?;
    println!(
        "pga: {} iterations, fitted ratio {:.4} (1 - gamma/L = {:.4})",
        trace.iterations(),
        rep.fitted_ratio.unwrap_or(f64::NAN),
        1.0 - 0.1 / 10.0
    );
    Ok(())
}
