//! Sparse logistic regression from a LIBSVM file.
//!
//! With a path argument the file is read directly (for example
//! `cargo run --release --example libsvm_logistic -- data/a9a`); without one a
//! synthetic file is written to a temporary directory first.

use std::sync::Arc;

use proxqn::dataset::{read_libsvm, synthesize_logistic, LibsvmOptions};
use proxqn::optimizers::{run_apqna_fh, OptimizerConfig};
use proxqn::problem::CompositeProblem;

fn main() -> proxqn::Result<()> {
    let tmp;
    let path = match std::env::args().nth(1) {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            tmp = std::env::temp_dir().join("proxqn-example.svm");
            synthesize_logistic(2000, 60, 0.15, 3)?.write_libsvm(&tmp)?;
            tmp.clone()
        }
    };
    let data = read_libsvm(&path, &LibsvmOptions::default())?;
    let s = data.stats();
    println!(
        "{}: {} points, {} features, {} nonzeros, {}/{} positive/negative",
        path.display(),
        s.n_points,
        s.n_features,
        s.nnz,
        s.n_positive,
        s.n_negative
    );

    let problem = CompositeProblem::logistic(Arc::new(data), 1e-3)?;
    let trace = run_apqna_fh(&problem, &OptimizerConfig::default())?;
    let nnz = trace.solution.iter().filter(|w| **w != 0.0).count();
    println!(
        "apqna-fh: {} in {} iterations, F = {:.6e}, {nnz} nonzero weights",
        trace.status,
        trace.iterations(),
        trace.final_fval()
    );
    Ok(())
}
