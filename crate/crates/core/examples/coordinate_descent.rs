//! Solving the composite quadratic subproblem `min_u Q_H(u, v)` with
//! randomized coordinate descent and comparing against the exact solver.

use proxqn::hessian::model_value;
use proxqn::oracles::random_lbfgs_model;
use proxqn::problem::l1_value;
use proxqn::subsolver::{budget_for_iteration, cd_minimize, exact_solve_oracle, phi_constant, SubproblemBudget};

fn main() -> proxqn::Result<()> {
    let n = 20;
    let lambda = 0.1;
    let h = random_lbfgs_model(n, 3, 42);
    let grad: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
    let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
    let q = |u: &[f64]| model_value(&h, u, &v, 0.0, &grad, l1_value(u, lambda));

    let exact = exact_solve_oracle(&h, &grad, &v, lambda, 1e-12)?;
    let q_star = q(&exact)?;
    let q0 = q(&v)? - q_star;
    let (m, big_m) = h.dense_extreme_eigenvalues();
    let phi = phi_constant(m, big_m)?;
    println!("m = {m:.3}, M = {big_m:.3}, phi = {phi:.4}");
    for r in [10, 50, 200, 1000] {
        let u = cd_minimize(&h, &grad, &v, lambda, r, 7)?;
        let bound = (1.0 - (1.0 - phi) / n as f64).powi(r as i32);
        println!("r = {r:>4}: relative gap {:.3e} (expected-rate bound {bound:.3e})", (q(&u)? - q_star) / q0);
    }

    // Outer iteration k gets max(5, ceil(min(1000, k / 3))) coordinate steps.
    let budget = SubproblemBudget::default();
    let ks = [1, 30, 300, 3000, 30000];
    let steps: Vec<usize> = ks.iter().map(|&k| budget_for_iteration(k, &budget)).collect();
    println!("budget at k = {ks:?}: {steps:?}");
    Ok(())
}
