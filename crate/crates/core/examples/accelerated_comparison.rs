//! All six algorithms on a sparse logistic problem shaped like a9a, run
//! concurrently, with the comparison table at three checkpoints.

use proxqn::harness::{run_on_problem, AlgorithmRun, ProblemSource};
use proxqn::optimizers::{Algorithm, OptimizerConfig};

fn main() -> proxqn::Result<()> {
    let points = std::env::args().nth(1).map_or(8000, |s| s.parse().expect("points"));
    let source = ProblemSource::Logistic {
        points,
        features: 123,
        density: 0.11,
        seed: 1,
    };
    let loaded = source.load(1e-3)?;
    println!("{}", loaded.description);
    let runs: Vec<AlgorithmRun> = Algorithm::ALL
        .iter()
        .map(|&a| AlgorithmRun {
            label: a.name().to_string(),
            algorithm: a,
            config: OptimizerConfig::default(),
        })
        .collect();
    let out = run_on_problem(&loaded.problem, &runs, None)?;
    print!("{}", out.report.to_text());
    for (label, t) in &out.traces {
        println!("{label:<12} {} after {} iterations", t.status, t.iterations());
    }
    Ok(())
}
