//! Writing a trace CSV, reading it back and checking it against the
//! accelerated `1 / (2 mu t_k^2)` envelope.

use proxqn::dataset::synthesize_quadratic;
use proxqn::harness::{emit_trace_csv, rate_diagnostics, read_trace_csv, AcceleratedEnvelope, RateBounds};
use proxqn::optimizers::{run_apga, OptimizerConfig};
use proxqn::problem::CompositeProblem;

fn main() -> proxqn::Result<()> {
    let q = synthesize_quadratic(40, 0.01, 4.0, 2)?;
    let p = CompositeProblem::quadratic(&q, 0.0)?;
    let xs = q.unregularized_minimizer();
    let trace = run_apga(&p, &OptimizerConfig { mu_init: 0.25, tol_rel: 1e-6, ..Default::default() })?;

    let path = std::env::temp_dir().join("proxqn-apga-trace.csv");
    emit_trace_csv(&trace, &path)?;
    let records = read_trace_csv(&path)?;
    assert_eq!(records, trace.records);
    println!("{} rows written to {}", records.len(), path.display());

    let bounds = RateBounds {
        accelerated: Some(AcceleratedEnvelope {
            dist0_sq: xs.iter().map(|x| x * x).sum(),
            start_k: 0,
        }),
        ..Default::default()
    };
    let rep = rate_diagnostics(&records, p.value(&xs).min(trace.final_fval()), &bounds)?;
    println!("fitted tail ratio: {:?}", rep.fitted_ratio);
    println!("envelope violations: {}", rep.accelerated_violations());
    Ok(())
}
