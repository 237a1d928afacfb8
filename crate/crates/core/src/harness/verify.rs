//! Self-verification suite: each check compares a solver component against an
//! independent oracle or an invariant that must hold on every run.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::diagnostics::{rate_diagnostics, AcceleratedEnvelope, RateBounds};
use crate::dataset::{synthesize_logistic, synthesize_quadratic};
use crate::error::Error;
use crate::hessian::{diagonal_model, enforce_domination, model_value, CorrectionPairs, HessianModel, DEFAULT_CURVATURE_EPS};
use crate::linalg::{dot, max_abs_diff};
use crate::optimizers::{
    run_apga_with, run_apqna_fh, run_apqna_fh_with, run_apqna_with, run_pga_with, run_pqna_with, theoretical_linear_rate,
    CarryOverSource, DominationMode, IterateRecorder, OptimizerConfig, PqnaHessian, SubsolverKind,
};
use crate::oracles::{
    dense_bfgs, dense_lasso_quadratic, directional_derivative, golden_section_diff, grid_min_abs_subgradient,
    random_lbfgs_model,
};
use crate::problem::{l1_value, min_norm_subgradient, soft_threshold, CompositeProblem};
use crate::subsolver::{coordinate_minimizer, cd_minimize, exact_solve_oracle, phi_constant, CdWorkspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Fast,
    /// Adds the statistical rate checks.
    Full,
}

impl FromStr for VerifyLevel {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "fast" => Ok(VerifyLevel::Fast),
            "full" => Ok(VerifyLevel::Full),
            _ => Err(Error::invalid(format!("unknown verify level `{s}` (fast or full)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_sec: f64,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<28} {:>7.2}s  {}", c.name, c.elapsed_sec, c.detail)?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

type Check = Result<String, String>;

fn lift<T>(r: crate::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Runs the suite with the library's soft-thresholding operator.
pub fn verify_suite(level: VerifyLevel) -> VerifyReport {
    verify_suite_with(level, soft_threshold)
}

/// Runs the suite with `soft` standing in for the soft-thresholding
/// operator in the prox checks, so that a broken operator can be shown to
/// be caught.
pub fn verify_suite_with(level: VerifyLevel, soft: fn(f64, f64) -> f64) -> VerifyReport {
    let mut checks: Vec<(&'static str, Box<dyn Fn() -> Check>)> = vec![
        ("gradient-finite-difference", Box::new(check_gradients)),
        ("soft-threshold-golden", Box::new(move || check_soft_threshold(soft))),
        ("prox-optimality", Box::new(move || check_prox_optimality(soft))),
        ("coordinate-step-golden", Box::new(check_coordinate_step)),
        ("min-norm-subgradient-grid", Box::new(check_min_norm_subgradient)),
        ("lbfgs-compact-vs-dense", Box::new(check_lbfgs_dense)),
        ("cd-vs-exact", Box::new(check_cd_vs_exact)),
        ("cd-monotone-cache", Box::new(check_cd_monotone_cache)),
        ("reduction-pqna-pga", Box::new(check_pqna_reduction)),
        ("reduction-apqna-apga", Box::new(check_apqna_reduction)),
        ("fh-momentum-envelope", Box::new(check_fh_envelope)),
        ("domination-pathology", Box::new(check_pathology)),
    ];
    if level == VerifyLevel::Full {
        checks.push(("linear-rate", Box::new(check_linear_rate)));
        checks.push(("cd-rate", Box::new(check_cd_rate)));
        checks.push(("fh-sigma-floor", Box::new(check_sigma_floor)));
    }
    let mut report = VerifyReport::default();
    for (name, run) in checks {
        let start = Instant::now();
        let outcome = run();
        let elapsed_sec = start.elapsed().as_secs_f64();
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        log::info!("{name}: {}", if passed { "pass" } else { "FAIL" });
        report.checks.push(CheckResult {
            name,
            passed,
            detail,
            elapsed_sec,
        });
    }
    report
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn check_gradients() -> Check {
    let data = Arc::new(lift(synthesize_logistic(200, 30, 0.3, 1))?);
    let q = lift(synthesize_quadratic(25, 0.1, 10.0, 2))?;
    let problems = [
        lift(CompositeProblem::logistic(data, 0.0))?,
        lift(CompositeProblem::quadratic(&q, 0.0))?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for p in &problems {
        let n = p.dim();
        for _ in 0..10 {
            let x = normal_vec(&mut rng, n);
            let dir = normal_vec(&mut rng, n);
            let mut grad = vec![0.0; n];
            p.f_and_grad(&x, &mut grad);
            let exact = dot(&grad, &dir);
            let fd = directional_derivative(|z| p.f(z), &x, &dir, 1e-5);
            worst = worst.max((fd - exact).abs() / exact.abs().max(1.0));
        }
    }
    if worst <= 1e-6 {
        Ok(format!("max relative error {worst:.2e}"))
    } else {
        Err(format!("gradient disagrees with finite differences: {worst:.2e}"))
    }
}

// f(c) - f(d) for `a z^2 / 2 + b z + lambda |u + z|`, factored so the search
// can resolve the minimizer to ~1e-13.
fn coordinate_diff(a: f64, b: f64, u: f64, lambda: f64) -> impl Fn(f64, f64) -> f64 {
    move |c, d| {
        let (pc, pd) = (u + c, u + d);
        let abs_diff = if pc * pd > 0.0 { pc.signum() * (c - d) } else { pc.abs() - pd.abs() };
        (c - d) * (0.5 * a * (c + d) + b) + lambda * abs_diff
    }
}

fn check_soft_threshold(soft: fn(f64, f64) -> f64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let v = 10.0 * (rng.random::<f64>() - 0.5);
        let tau = 2.0 * rng.random::<f64>();
        // 0.5 (u - v)^2 + tau |u| is the coordinate objective with a = 1, b = -v, u = 0.
        let g = golden_section_diff(coordinate_diff(1.0, -v, 0.0, tau), -20.0, 20.0, 1e-13);
        worst = worst.max((soft(v, tau) - g).abs());
    }
    if worst <= 1e-8 {
        Ok(format!("1000 cases, max error {worst:.2e}"))
    } else {
        Err(format!("soft threshold off by {worst:.2e} from golden-section search"))
    }
}

fn check_prox_optimality(soft: fn(f64, f64) -> f64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let v = 6.0 * (rng.random::<f64>() - 0.5);
        let mu = 0.1 + rng.random::<f64>();
        let lambda = rng.random::<f64>();
        let p = soft(v, mu * lambda);
        // 0 in (p - v) / mu + lambda * d|p|
        let ok = if p != 0.0 {
            ((p - v) / mu + lambda * p.signum()).abs() <= 1e-12 * (1.0 + v.abs() / mu)
        } else {
            v.abs() <= mu * lambda * (1.0 + 1e-12)
        };
        if !ok {
            return Err(format!("optimality fails at v={v}, mu={mu}, lambda={lambda}: prox = {p}"));
        }
    }
    Ok("1000 cases".into())
}

fn check_coordinate_step() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let a = 0.1 + 5.0 * rng.random::<f64>();
        let b = 4.0 * (rng.random::<f64>() - 0.5);
        let u = 4.0 * (rng.random::<f64>() - 0.5);
        let lambda = rng.random::<f64>();
        let z = lift(coordinate_minimizer(a, b, u, lambda))?;
        let g = golden_section_diff(coordinate_diff(a, b, u, lambda), -50.0, 50.0, 1e-13);
        worst = worst.max((z - g).abs());
    }
    if worst <= 1e-8 {
        Ok(format!("1000 cases, max error {worst:.2e}"))
    } else {
        Err(format!("coordinate step off by {worst:.2e}"))
    }
}

fn check_min_norm_subgradient() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let points = 200_000;
    for _ in 0..200 {
        let g = 4.0 * (rng.random::<f64>() - 0.5);
        let lambda = rng.random::<f64>();
        let s = lift(min_norm_subgradient(&[g], &[0.0], lambda))?[0];
        let grid = grid_min_abs_subgradient(g, lambda, points);
        if (s - grid).abs() > 2.0 * lambda / points as f64 + 1e-15 {
            return Err(format!("g={g}, lambda={lambda}: {s} vs grid {grid}"));
        }
        let w = rng.random::<f64>() - 0.5;
        let s = lift(min_norm_subgradient(&[g], &[w], lambda))?[0];
        if s != g + lambda * w.signum() {
            return Err(format!("nonzero coordinate: {s}"));
        }
    }
    Ok("200 cases on and off the kink".into())
}

fn check_lbfgs_dense() -> Check {
    let mut worst = 0.0_f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let n = 8;
        let a = nalgebra::DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let spd = &a * a.transpose() + nalgebra::DMatrix::identity(n, n);
        let mut pairs = CorrectionPairs::new(4, DEFAULT_CURVATURE_EPS);
        while pairs.len() < 4 {
            let s = normal_vec(&mut rng, n);
            let y: Vec<f64> = (&spd * nalgebra::DVector::from_column_slice(&s)).iter().cloned().collect();
            lift(pairs.update(&s, &y))?;
        }
        let compact = pairs.compile(n);
        let dense = dense_bfgs(&pairs);
        let v = normal_vec(&mut rng, n);
        let hv = compact.apply(&v);
        let dv: Vec<f64> = (&dense * nalgebra::DVector::from_column_slice(&v)).iter().cloned().collect();
        let scale = dv.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        worst = worst.max(max_abs_diff(&hv, &dv) / scale);
    }
    if worst <= 1e-8 {
        Ok(format!("20 models, max relative error {worst:.2e}"))
    } else {
        Err(format!("compact matvec differs from dense BFGS by {worst:.2e}"))
    }
}

fn q_value(h: &HessianModel, u: &[f64], v: &[f64], grad: &[f64], lambda: f64) -> Result<f64, String> {
    lift(model_value(h, u, v, 0.0, grad, l1_value(u, lambda)))
}

fn check_cd_vs_exact() -> Check {
    let n = 20;
    let mut worst = 0.0_f64;
    for seed in 0..5 {
        let h = random_lbfgs_model(n, 3, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 50);
        let grad = normal_vec(&mut rng, n);
        let v = normal_vec(&mut rng, n);
        let exact = lift(exact_solve_oracle(&h, &grad, &v, 0.3, 1e-12))?;
        let u = lift(cd_minimize(&h, &grad, &v, 0.3, 5000, seed))?;
        worst = worst.max(q_value(&h, &u, &v, &grad, 0.3)? - q_value(&h, &exact, &v, &grad, 0.3)?);
    }
    if worst.abs() <= 1e-6 {
        Ok(format!("max objective gap {worst:.2e}"))
    } else {
        Err(format!("CD ends {worst:.2e} above the exact minimum"))
    }
}

fn check_cd_monotone_cache() -> Check {
    let n = 30;
    let h = random_lbfgs_model(n, 5, 8);
    let grad: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let v = vec![0.1; n];
    let mut ws = lift(CdWorkspace::new(&h, &grad, &v, 0.1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut prev = q_value(&h, ws.point(), &v, &grad, 0.1)?;
    for step in 0..10_000 {
        lift(ws.step(rng.random_range(0..n)))?;
        if step % 10 == 0 {
            let q = q_value(&h, ws.point(), &v, &grad, 0.1)?;
            if q > prev + 1e-12 * prev.abs().max(1.0) {
                return Err(format!("objective rose at step {step}: {prev} -> {q}"));
            }
            prev = q;
        }
    }
    let err = ws.cache_error();
    if err <= 1e-10 {
        Ok(format!("10^4 steps, cache drift {err:.2e}"))
    } else {
        Err(format!("cached gradient drifted by {err:.2e}"))
    }
}

fn iterate_gap(a: &IterateRecorder, b: &IterateRecorder) -> Result<f64, String> {
    if a.iterates.len() != b.iterates.len() {
        return Err(format!("iteration counts differ: {} vs {}", a.iterates.len(), b.iterates.len()));
    }
    Ok(a.iterates
        .iter()
        .zip(&b.iterates)
        .map(|(x, y)| max_abs_diff(x, y))
        .fold(0.0, f64::max))
}

fn check_pqna_reduction() -> Check {
    let q = lift(synthesize_quadratic(25, 0.2, 8.0, 4))?;
    let p = lift(CompositeProblem::quadratic(&q, 0.05))?;
    // PQNA with G = 0 and step mu uses the metric I / (2 mu), i.e. a PGA step of 2 mu.
    let pga = OptimizerConfig {
        mu_init: 1.0,
        mu_max: 4.0,
        ..Default::default()
    };
    let pqna = OptimizerConfig {
        eta: 1.0,
        mu_init: 0.5,
        mu_max: 2.0,
        ..Default::default()
    };
    let (mut a, mut b) = (IterateRecorder::default(), IterateRecorder::default());
    lift(run_pga_with(&p, &pga, &mut a))?;
    lift(run_pqna_with(&p, &pqna, PqnaHessian::Zero, &mut b))?;
    let gap = iterate_gap(&a, &b)?;
    if gap <= 1e-12 {
        Ok(format!("{} iterates, max difference {gap:.2e}", a.iterates.len()))
    } else {
        Err(format!("iterates differ by {gap:.2e}"))
    }
}

fn check_apqna_reduction() -> Check {
    let mut worst = 0.0_f64;
    let mut total = 0;
    for (scale, seed, mode) in [(0.9, 3, DominationMode::Strict), (12.0, 5, DominationMode::Relaxed)] {
        let q = lift(synthesize_quadratic(20, 0.1 * scale, scale, seed))?;
        let p = lift(CompositeProblem::quadratic(&q, 0.02))?;
        let cfg = OptimizerConfig {
            domination: mode,
            ..Default::default()
        };
        let (mut a, mut b) = (IterateRecorder::default(), IterateRecorder::default());
        lift(run_apga_with(&p, &cfg, &mut a))?;
        let mut src = CarryOverSource(HessianModel::identity(20));
        lift(run_apqna_with(&p, &cfg, &mut src, &mut b))?;
        worst = worst.max(iterate_gap(&a, &b)?);
        total += a.iterates.len();
    }
    if worst <= 1e-12 {
        Ok(format!("{total} iterates, max difference {worst:.2e}"))
    } else {
        Err(format!("iterates differ by {worst:.2e}"))
    }
}

/// Fixed-Hessian method with `H_1 = I`, `sigma_1 = 1` on seeded quadratics.
/// Returns `(momentum-sequence violations, envelope violations, iterations checked)`.
pub fn fh_envelope_violations(seed: u64) -> crate::Result<(usize, usize, usize)> {
    let q = synthesize_quadratic(40, 0.02, 5.0, seed)?;
    let lambda = 0.01;
    let p = CompositeProblem::quadratic(&q, lambda)?;
    let xs = dense_lasso_quadratic(&q.matrix, &q.b, lambda, 1_000_000);
    let cfg = OptimizerConfig {
        warmup_kbar: 0,
        tol_rel: 1e-7,
        ..Default::default()
    };
    let tr = run_apqna_fh_with(&p, &cfg, None, &mut crate::optimizers::NoMonitor)?.into_result(cfg.backtrack_cap)?;
    let f_star = p.value(&xs).min(tr.records.iter().map(|r| r.fval).fold(f64::INFINITY, f64::min));
    let start_k = tr.accel_start.unwrap_or(1) - 1;
    let bounds = RateBounds {
        accelerated: Some(AcceleratedEnvelope {
            dist0_sq: dot(&xs, &xs),
            start_k,
        }),
        ..Default::default()
    };
    let rep = rate_diagnostics(&tr.records, f_star, &bounds)?;
    let checked = rep.accelerated.as_ref().map_or(0, |v| v.len());
    Ok((tr.momentum_violations, rep.accelerated_violations(), checked))
}

fn check_fh_envelope() -> Check {
    let mut checked = 0;
    for seed in 0..3 {
        let (mom, env, n) = lift(fh_envelope_violations(seed))?;
        if mom > 0 || env > 0 {
            return Err(format!("seed {seed}: {mom} momentum-sequence and {env} envelope violations"));
        }
        checked += n;
    }
    Ok(format!("{checked} iterations, no violations"))
}

/// Strict domination along alternating `diag(10, 1)`, `diag(1, 10)` from
/// `sigma_0 = 1`. Returns the largest relative deviation from `10^-k`.
pub fn pathology_chain(k_max: usize) -> crate::Result<f64> {
    let even = diagonal_model(&[10.0, 1.0])?;
    let odd = diagonal_model(&[1.0, 10.0])?;
    let mut sigma = 1.0;
    let mut worst = 0.0_f64;
    for k in 1..=k_max {
        let (prev, new) = if k % 2 == 1 { (&even, &odd) } else { (&odd, &even) };
        sigma = enforce_domination(new, sigma, prev, 2)?;
        let expect = 10f64.powi(-(k as i32));
        worst = worst.max((sigma - expect).abs() / expect);
    }
    Ok(worst)
}

fn check_pathology() -> Check {
    let worst = lift(pathology_chain(250))?;
    if worst <= 1e-12 {
        Ok(format!("250 steps, max relative deviation {worst:.2e}"))
    } else {
        Err(format!("sigma_k deviates from 10^-k by {worst:.2e}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRateCheck {
    pub rho: f64,
    pub m_est: f64,
    pub iterations: usize,
    pub violations: usize,
}

/// PQNA with `eta = 1` and exact subproblems on a strongly convex quadratic
/// with `gamma = 0.1`, `L = 10`, `n = 50`, checked against
/// `F(x_k) - F* <= rho^k (F(x_0) - F*)`, `rho = 1 - gamma / (gamma + M)`
/// with `M` the largest eigenvalue over the accepted models.
pub fn linear_rate_check(seed: u64) -> crate::Result<LinearRateCheck> {
    let gamma = 0.1;
    let lambda = 1e-2;
    let q = synthesize_quadratic(50, gamma, 10.0, seed)?;
    let p = CompositeProblem::quadratic(&q, lambda)?;
    let cfg = OptimizerConfig {
        eta: 1.0,
        subsolver: SubsolverKind::Exact { tol: 1e-12 },
        tol_rel: 1e-7,
        seed,
        ..Default::default()
    };
    let mut rec = IterateRecorder::with_hessians();
    let tr = run_pqna_with(&p, &cfg, PqnaHessian::Lbfgs, &mut rec)?.into_result(cfg.backtrack_cap)?;
    let m_est = rec
        .hessians
        .iter()
        .map(|h| h.dense_extreme_eigenvalues().1)
        .fold(0.0, f64::max);
    let rho = theoretical_linear_rate(gamma, m_est, 1.0)?;
    let xs = dense_lasso_quadratic(&q.matrix, &q.b, lambda, 1_000_000);
    let f_star = p.value(&xs).min(tr.records.iter().map(|r| r.fval).fold(f64::INFINITY, f64::min));
    let rep = rate_diagnostics(
        &tr.records,
        f_star,
        &RateBounds {
            linear_rho: Some(rho),
            ..Default::default()
        },
    )?;
    Ok(LinearRateCheck {
        rho,
        m_est,
        iterations: tr.iterations(),
        violations: rep.linear_violations(),
    })
}

fn check_linear_rate() -> Check {
    let mut total = 0;
    for seed in 0..5 {
        let c = lift(linear_rate_check(seed))?;
        if c.violations > 0 {
            return Err(format!("seed {seed}: {} violations of rho = {:.6}", c.violations, c.rho));
        }
        total += c.iterations;
    }
    Ok(format!("5 seeds, {total} iterations, no violations"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdRateRow {
    pub r: usize,
    /// Mean of `(Q(u_r) - Q*) / (Q(u_0) - Q*)`.
    pub mean_ratio: f64,
    /// Mean of `(1 - (1 - phi) / n)^r` over the same subproblems.
    pub mean_bound: f64,
}

/// Randomized CD on `seeds` seeded `n = 20` subproblems.
pub fn cd_rate_rows(seeds: u64, rs: &[usize]) -> crate::Result<Vec<CdRateRow>> {
    let n = 20;
    let lambda = 0.1;
    let mut rows: Vec<CdRateRow> = rs
        .iter()
        .map(|&r| CdRateRow {
            r,
            mean_ratio: 0.0,
            mean_bound: 0.0,
        })
        .collect();
    for seed in 0..seeds {
        let h = random_lbfgs_model(n, 3, 1000 + seed);
        let (m, big_m) = h.dense_extreme_eigenvalues();
        let phi = phi_constant(m, big_m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let grad = normal_vec(&mut rng, n);
        let v = normal_vec(&mut rng, n);
        let q = |u: &[f64]| model_value(&h, u, &v, 0.0, &grad, l1_value(u, lambda));
        let q_star = q(&exact_solve_oracle(&h, &grad, &v, lambda, 1e-13)?)?;
        let q0 = q(&v)? - q_star;
        for row in &mut rows {
            let u = cd_minimize(&h, &grad, &v, lambda, row.r, 3000 + seed)?;
            row.mean_ratio += ((q(&u)? - q_star) / q0).max(0.0);
            row.mean_bound += (1.0 - (1.0 - phi) / n as f64).powi(row.r as i32);
        }
    }
    for row in &mut rows {
        row.mean_ratio /= seeds as f64;
        row.mean_bound /= seeds as f64;
    }
    Ok(rows)
}

fn check_cd_rate() -> Check {
    let rows = lift(cd_rate_rows(200, &[20, 100, 500]))?;
    let summary: Vec<String> = rows
        .iter()
        .map(|r| format!("r={} {:.3e}<={:.3e}", r.r, r.mean_ratio, 1.1 * r.mean_bound))
        .collect();
    if rows.iter().all(|r| r.mean_ratio <= 1.1 * r.mean_bound) {
        Ok(summary.join(", "))
    } else {
        Err(summary.join(", "))
    }
}

/// Smallest `sigma_k / min(sigma_1, beta m / L)` over the accelerated phase of
/// fixed-Hessian runs on seeded logistic problems.
pub fn sigma_floor_margin(seeds: u64) -> crate::Result<f64> {
    let mut worst = f64::INFINITY;
    for seed in 0..seeds {
        let data = Arc::new(synthesize_logistic(300, 25, 0.3, seed)?);
        let p = CompositeProblem::logistic(data, 1e-3)?;
        let l = p
            .smooth()
            .lipschitz_bound()
            .ok_or_else(|| Error::Numerical("no Lipschitz bound".into()))?;
        let cfg = OptimizerConfig::default();
        let tr = run_apqna_fh(&p, &cfg)?.into_result(cfg.backtrack_cap)?;
        let (m, _) = tr.base_bounds.ok_or_else(|| Error::Numerical("no base matrix".into()))?;
        let floor = (cfg.beta * m / l).min(cfg.sigma_init);
        let start = tr.accel_start.unwrap_or(1);
        for r in tr.records.iter().filter(|r| r.k >= start) {
            worst = worst.min(r.step_scalar / floor);
        }
    }
    Ok(worst)
}

fn check_sigma_floor() -> Check {
    let margin = lift(sigma_floor_margin(4))?;
    if margin >= 1.0 - 1e-12 {
        Ok(format!("min sigma_k / floor = {margin:.3}"))
    } else {
        Err(format!("sigma fell to {margin:.3} of its lower bound"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let rep = verify_suite(VerifyLevel::Fast);
        assert!(rep.all_passed(), "{rep}");
        assert!(rep.check("linear-rate").is_none());
    }

    #[test]
    fn sign_error_in_soft_threshold_is_caught() {
        fn broken(v: f64, tau: f64) -> f64 {
            -soft_threshold(v, tau)
        }
        let rep = verify_suite_with(VerifyLevel::Fast, broken);
        assert!(!rep.check("soft-threshold-golden").unwrap().passed);
        assert!(!rep.check("prox-optimality").unwrap().passed);
    }

    #[test]
    fn level_parsing() {
        assert_eq!("full".parse::<VerifyLevel>().unwrap(), VerifyLevel::Full);
        assert!("slow".parse::<VerifyLevel>().is_err());
    }
}
