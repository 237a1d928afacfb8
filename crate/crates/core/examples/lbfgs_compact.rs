//! Compact L-BFGS matrices `delta I + Q W Q^T`: building them from
//! correction pairs, checking against the dense BFGS recursion and reading
//! off spectral bounds.

use nalgebra::{DMatrix, DVector};
use proxqn::hessian::{CorrectionPairs, HessianModel};
use proxqn::oracles::dense_bfgs;

fn main() -> proxqn::Result<()> {
    let n = 6;
    let a = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + i as f64 } else { 0.1 });
    let mut pairs = CorrectionPairs::new(3, 1e-8);
    for k in 0..5 {
        let s = DVector::from_fn(n, |i, _| ((i + 2 * k) as f64).sin());
        let y = &a * &s;
        let stored = pairs.update(s.as_slice(), y.as_slice())?;
        println!("pair {k}: stored={stored}, memory holds {}", pairs.len());
    }

    let b = pairs.compile(n);
    println!("rank of low-rank part: {}, delta = {:.4}", b.rank(), b.delta());
    let err = (b.to_dense() - dense_bfgs(&pairs)).abs().max();
    println!("max |compact - dense BFGS| = {err:.2e}");

    let (m, big_m) = b.spectrum_bounds();
    println!("spectrum in [{m:.4}, {big_m:.4}]");

    // Scaled copies share storage; inflating divides by beta.
    let h = HessianModel::LbfgsCompact(b);
    let inflated = h.inflate(0.5);
    let e0 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    println!("H e0 = {:?}", h.apply(&e0)?);
    println!("(H / 0.5) e0 = {:?}", inflated.apply(&e0)?);
    Ok(())
}
