//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line to the real
//! stdout (bypassing the test harness capture) before asserting.
//!
//! Criteria 1 and 2 need the LIBSVM files `a9a`, `connect-4` and `HAPT` in
//! `$PROXQN_DATA_DIR` (default `data/` at the workspace root). They are
//! ignored by default; run them with `cargo test --test acceptance -- --ignored`.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use proxqn::dataset::{read_libsvm, synthesize_logistic, synthesize_quadratic, LibsvmOptions};
use proxqn::harness::{
    cd_rate_rows, fh_envelope_violations, gap_slack, linear_rate_check, pathology_chain, rate_diagnostics, run_on_problem,
    AcceleratedEnvelope, AlgorithmRun, RateBounds,
};
use proxqn::hessian::diagonal_model;
use proxqn::linalg::dist_sq;
use proxqn::optimizers::{
    run_apga, run_apqna_fh, run_apqna_fh_with, run_apqna_with, AlternatingSource, Algorithm, DominationMode, NoMonitor,
    OptimizerConfig, SubsolverKind,
};
use proxqn::problem::{CompositeProblem, QuadraticLoss};

fn verdict(criterion: u32, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    let line = format!("{tag} criterion {criterion}: {detail}\n");
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(passed, "criterion {criterion} failed: {detail}");
}

fn data_dir() -> PathBuf {
    std::env::var_os("PROXQN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// Loads `name` from the data directory, or reports the criterion as failed.
fn load_named(criterion: u32, name: &str, positive: Option<&str>) -> CompositeProblem {
    let path = data_dir().join(name);
    let opts = LibsvmOptions {
        positive_label: positive.map(str::to_string),
        n_features: None,
    };
    match read_libsvm(&path, &opts) {
        Ok(d) => CompositeProblem::logistic(Arc::new(d), 1e-3).unwrap(),
        Err(e) => {
            verdict(criterion, false, &format!("cannot load {name}: {e}"));
            unreachable!()
        }
    }
}

fn protocol_config() -> OptimizerConfig {
    OptimizerConfig {
        tol_rel: 1e-5,
        ..Default::default()
    }
}

#[test]
#[ignore = "needs the a9a LIBSVM file in PROXQN_DATA_DIR"]
fn criterion_1_a9a_reproduction() {
    let start = Instant::now();
    let p = load_named(1, "a9a", None);
    let runs: Vec<AlgorithmRun> = Algorithm::ALL
        .iter()
        .map(|&a| AlgorithmRun {
            label: a.name().into(),
            algorithm: a,
            config: protocol_config(),
        })
        .collect();
    let out = run_on_problem(&p, &runs, None).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let mut problems = Vec::new();
    for (label, t) in &out.traces {
        if (t.final_fval() - 3.4703e-1).abs() > 2e-4 {
            problems.push(format!("{label} F = {:.6e}", t.final_fval()));
        }
    }
    let fh = out.trace("apqna-fh").unwrap().iterations();
    let apga = out.trace("apga").unwrap().iterations();
    if fh > 300 {
        problems.push(format!("apqna-fh took {fh} iterations"));
    }
    if apga > 2000 {
        problems.push(format!("apga took {apga} iterations"));
    }
    if elapsed > 120.0 {
        problems.push(format!("took {elapsed:.1} s"));
    }
    let detail = format!("apqna-fh {fh} it, apga {apga} it, {elapsed:.1} s {}", problems.join("; "));
    verdict(1, problems.is_empty(), detail.trim_end());
}

#[test]
#[ignore = "needs the a9a, connect-4 and HAPT LIBSVM files in PROXQN_DATA_DIR"]
fn criterion_2_fixed_hessian_needs_fewer_iterations() {
    let c4_pos = std::env::var("PROXQN_CONNECT4_POSITIVE").unwrap_or_else(|_| "1".into());
    let hapt_pos = std::env::var("PROXQN_HAPT_POSITIVE").unwrap_or_else(|_| "1".into());
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, pos) in [("a9a", None), ("connect-4", Some(c4_pos.as_str())), ("HAPT", Some(hapt_pos.as_str()))] {
        let p = load_named(2, name, pos);
        let fh = run_apqna_fh(&p, &protocol_config()).unwrap().iterations();
        let apga = run_apga(&p, &protocol_config()).unwrap().iterations();
        ok &= fh < apga;
        lines.push(format!("{name} {fh} vs {apga}"));
    }
    verdict(2, ok, &lines.join(", "));
}

#[test]
fn criterion_3_linear_rate_under_strong_convexity() {
    let mut total = 0;
    let mut worst = Vec::new();
    for seed in 0..20 {
        let c = linear_rate_check(seed).unwrap();
        total += c.iterations;
        if c.violations > 0 {
            worst.push(format!("seed {seed}: {} violations (rho {:.5})", c.violations, c.rho));
        }
    }
    let detail = if worst.is_empty() {
        format!("20 seeds, {total} iterations, zero violations")
    } else {
        worst.join("; ")
    };
    verdict(3, worst.is_empty(), &detail);
}

#[test]
fn criterion_4_coordinate_descent_rate() {
    let rows = cd_rate_rows(200, &[20, 100, 500]).unwrap();
    let ok = rows.iter().all(|r| r.mean_ratio <= 1.10 * r.mean_bound);
    let detail: Vec<String> = rows
        .iter()
        .map(|r| format!("r={}: {:.3e} <= {:.3e}", r.r, r.mean_ratio, 1.10 * r.mean_bound))
        .collect();
    verdict(4, ok, &detail.join(", "));
}

#[test]
fn criterion_5_accelerated_envelopes() {
    // Strongly convex instance of criterion 3 with lambda = 0.
    let q = synthesize_quadratic(50, 0.1, 10.0, 0).unwrap();
    let p = CompositeProblem::quadratic(&q, 0.0).unwrap();
    let xs = q.unregularized_minimizer();
    let f_star = p.value(&xs);
    let dist0_sq = dist_sq(&vec![0.0; 50], &xs);
    let slack = gap_slack(f_star);

    let mu = 1.0 / q.lipschitz();
    let cfg = OptimizerConfig {
        mu_init: mu,
        mu_max: mu,
        tol_rel: 0.0,
        max_outer: 500,
        ..Default::default()
    };
    let apga = run_apga(&p, &cfg).unwrap();
    let fixed_mu = apga.records[1..].iter().all(|r| r.step_scalar == mu);
    let apga_bad = apga.records[1..]
        .iter()
        .filter(|r| r.fval - f_star > 2.0 * dist0_sq / (mu * ((r.k + 1) as f64).powi(2)) + slack)
        .count();

    let fh_cfg = OptimizerConfig {
        warmup_kbar: 0,
        tol_rel: 0.0,
        max_outer: 500,
        ..Default::default()
    };
    let fh = run_apqna_fh_with(&p, &fh_cfg, None, &mut NoMonitor).unwrap();
    let env = RateBounds {
        accelerated: Some(AcceleratedEnvelope { dist0_sq, start_k: 0 }),
        ..Default::default()
    };
    let fh_bad = rate_diagnostics(&fh.records, f_star.min(fh.final_fval()), &env)
        .unwrap()
        .accelerated_violations();
    let mut l1_bad = 0;
    for seed in 0..4 {
        let (mom, bad, _) = fh_envelope_violations(seed).unwrap();
        l1_bad += mom + bad;
    }
    let ok = fixed_mu && apga_bad == 0 && fh_bad == 0 && l1_bad == 0;
    verdict(
        5,
        ok,
        &format!(
            "apga {} it (fixed mu: {fixed_mu}) {apga_bad} violations; fixed-Hessian {} it {fh_bad} violations; l1 instances {l1_bad} violations",
            apga.iterations(),
            fh.iterations()
        ),
    );
}

#[test]
fn criterion_6_trajectory_invariants() {
    let mut problems: Vec<(String, CompositeProblem)> = Vec::new();
    for seed in 0..6 {
        let d = synthesize_logistic(400, 30, 0.25, seed).unwrap();
        problems.push((format!("logistic seed {seed}"), CompositeProblem::logistic(Arc::new(d), 1e-3).unwrap()));
    }
    for seed in 0..4 {
        let q = synthesize_quadratic(40, 0.05, 8.0, seed).unwrap();
        problems.push((format!("quadratic seed {seed}"), CompositeProblem::quadratic(&q, 1e-2).unwrap()));
    }
    let cfg = OptimizerConfig::default();
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut min_margin = f64::INFINITY;
    for (name, p) in &problems {
        let tr = run_apqna_fh(p, &cfg).unwrap();
        let (m, _) = tr.base_bounds.unwrap();
        let l = p.smooth().lipschitz_bound().unwrap();
        let floor = (cfg.beta * m / l).min(cfg.sigma_init);
        let start = tr.accel_start.unwrap();
        for r in tr.records.iter().filter(|r| r.k >= start) {
            checked += 1;
            min_margin = min_margin.min(r.step_scalar / floor);
        }
        if tr.momentum_violations > 0 {
            failures.push(format!("{name}: {} momentum-sequence violations", tr.momentum_violations));
        }
    }
    if min_margin < 1.0 - 1e-12 {
        failures.push(format!("sigma dropped to {min_margin:.3} of its floor"));
    }
    let detail = if failures.is_empty() {
        format!(
            "{} problems, {checked} iterations, min sigma/floor {min_margin:.3}",
            problems.len()
        )
    } else {
        failures.join("; ")
    };
    verdict(6, failures.is_empty(), &detail);
}

#[test]
fn criterion_7_domination_pathology() {
    let chain = pathology_chain(250).unwrap();
    let loss = QuadraticLoss::new(nalgebra::DMatrix::identity(2, 2) * 0.5, vec![1.0, -2.0]).unwrap();
    let p = CompositeProblem::new(Arc::new(loss), 0.0).unwrap();
    let cfg = OptimizerConfig {
        domination: DominationMode::Strict,
        subsolver: SubsolverKind::Exact { tol: 1e-14 },
        tol_rel: 0.0,
        max_outer: 60,
        ..Default::default()
    };
    let mut src = AlternatingSource {
        even: diagonal_model(&[10.0, 1.0]).unwrap(),
        odd: diagonal_model(&[1.0, 10.0]).unwrap(),
    };
    let tr = run_apqna_with(&p, &cfg, &mut src, &mut NoMonitor).unwrap();
    let run_dev = tr.records[1..]
        .iter()
        .map(|r| {
            let e = 10f64.powi(-(r.k as i32));
            (r.step_scalar - e).abs() / e
        })
        .fold(0.0, f64::max);
    let ok = chain <= 1e-12 && run_dev <= 1e-12;
    verdict(
        7,
        ok,
        &format!(
            "chain to k=250 max rel dev {chain:.2e}; solver run {} it max rel dev {run_dev:.2e}",
            tr.iterations()
        ),
    );
}

#[test]
fn criterion_8_oracle_suites() {
    let start = Instant::now();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_proxqn"))
        .args(["verify", "--level", "full"])
        .output()
        .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let text = String::from_utf8_lossy(&out.stdout);
    let code = out.status.code().unwrap_or(-1);
    let summary = text.lines().last().unwrap_or("").to_string();
    let ok = code == 0 && elapsed < 300.0;
    if !ok {
        print!("{text}");
    }
    verdict(8, ok, &format!("verify --level full exit {code} in {elapsed:.1} s ({summary})"));
}
