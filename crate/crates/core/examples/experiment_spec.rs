//! An experiment spec in the flat `key = value` format, run end to end with
//! traces and reports written to a directory.

use proxqn::harness::{parse_experiment_spec, run_experiment};

const SPEC: &str = "
synthetic = logistic points=3000 features=80 density=0.1 seed=4
lambda = 1e-3
tol = 1e-5

[apga]

[pqna-lbfgs]

[apqna-fh]
warmup = 8

[fh-no-warmup]
algorithm = apqna-fh
warmup = 0
";

fn main() -> proxqn::Result<()> {
    let out_dir = std::env::temp_dir().join("proxqn-experiment");
    let mut spec = parse_experiment_spec(SPEC, "inline spec")?;
    spec.output_dir = Some(out_dir.clone());
    let (loaded, outcome) = run_experiment(&spec)?;
    println!("{}\n", loaded.description);
    print!("{}", outcome.report.to_text());
    println!("\ntraces and report written to {}", out_dir.display());
    Ok(())
}
