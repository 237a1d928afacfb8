//! Why strict domination `sigma_k H_k <= sigma_{k-1} H_{k-1}` can be
//! crippling: alternating `diag(10, 1)` and `diag(1, 10)` forces `sigma` down
//! by a factor of ten every iteration, while relaxed mode is unaffected.

use std::sync::Arc;

use nalgebra::DMatrix;
use proxqn::harness::pathology_chain;
use proxqn::hessian::diagonal_model;
use proxqn::optimizers::{run_apqna_with, AlternatingSource, DominationMode, NoMonitor, OptimizerConfig, SubsolverKind};
use proxqn::problem::{CompositeProblem, QuadraticLoss};

fn main() -> proxqn::Result<()> {
    println!("max relative deviation from 10^-k over 250 steps: {:.2e}", pathology_chain(250)?);

    let loss = QuadraticLoss::new(DMatrix::identity(2, 2) * 0.5, vec![1.0, -2.0])?;
    let p = CompositeProblem::new(Arc::new(loss), 0.0)?;
    for mode in [DominationMode::Strict, DominationMode::Relaxed] {
        let cfg = OptimizerConfig {
            domination: mode,
            subsolver: SubsolverKind::Exact { tol: 1e-14 },
            tol_rel: 1e-8,
            max_outer: 200,
            ..Default::default()
        };
        let mut src = AlternatingSource {
            even: diagonal_model(&[10.0, 1.0])?,
            odd: diagonal_model(&[1.0, 10.0])?,
        };
        match run_apqna_with(&p, &cfg, &mut src, &mut NoMonitor) {
            Ok(t) => {
                let sig: Vec<String> = t.records[1..].iter().take(5).map(|r| format!("{:.0e}", r.step_scalar)).collect();
                println!(
                    "{mode:?}: {} after {} iterations, F = {:.8}, first sigmas {}",
                    t.status,
                    t.iterations(),
                    t.final_fval(),
                    sig.join(" ")
                );
            }
            Err(e) => println!("{mode:?}: {e}"),
        }
    }
    Ok(())
}
