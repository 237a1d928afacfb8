//! The l1 proximal map, the soft-thresholding operator and the minimum-norm
//! subgradient used for termination.

use proxqn::problem::{min_norm_subgradient, prox_l1_scaled_identity, soft_threshold};

fn main() -> proxqn::Result<()> {
    for (v, tau) in [(3.0, 1.0), (-0.5, 1.0), (-2.5, 0.5)] {
        println!("soft({v}, {tau}) = {}", soft_threshold(v, tau));
    }

    // prox of mu * lambda * ||.||_1 at v
    let v = [1.5, -0.05, 0.3, -2.0];
    let p = prox_l1_scaled_identity(&v, 0.5, 0.4)?;
    println!("prox_{{0.5 * 0.4 |.|}}({v:?}) = {p:?}");

    // Zero coordinates absorb up to lambda of gradient.
    let grad = [0.3, -0.1, 0.8];
    let w = [0.0, 0.0, 1.0];
    println!("min-norm subgradient = {:?}", min_norm_subgradient(&grad, &w, 0.2)?);
    Ok(())
}
