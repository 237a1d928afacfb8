//! Independent reference computations used by the verification suite and
//! the tests: golden-section search, finite differences, the dense BFGS
//! recursion and brute-force grids. None of these share code with the
//! solvers they check.

use nalgebra::{DMatrix, DVector};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hessian::{CorrectionPairs, HessianModel, DEFAULT_CURVATURE_EPS};

/// Minimizes a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search driven by `diff(c, d) = f(c) - f(d)`, for
/// objectives where the difference can be formed without cancellation.
pub fn golden_section_diff(diff: impl Fn(f64, f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    while (hi - lo).abs() > tol {
        if diff(c, d) < 0.0 {
            hi = d;
            d = c;
            c = hi - inv_phi * (hi - lo);
        } else {
            lo = c;
            c = d;
            d = lo + inv_phi * (hi - lo);
        }
    }
    0.5 * (lo + hi)
}

/// Central difference `(f(x + h d) - f(x - h d)) / 2h`.
pub fn directional_derivative(f: impl Fn(&[f64]) -> f64, x: &[f64], dir: &[f64], h: f64) -> f64 {
    let plus: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + h * d).collect();
    let minus: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a - h * d).collect();
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// Dense BFGS recursion `B <- B - B s s^T B / s^T B s + y y^T / y^T s`,
/// started from `delta I` with `delta = y^T y / s^T y` of the newest pair.
pub fn dense_bfgs(pairs: &CorrectionPairs) -> DMatrix<f64> {
    let list: Vec<(&[f64], &[f64])> = pairs.pairs().collect();
    let Some(&(s_new, y_new)) = list.last() else {
        panic!("dense_bfgs needs at least one pair");
    };
    let n = s_new.len();
    let sn = DVector::from_column_slice(s_new);
    let yn = DVector::from_column_slice(y_new);
    let delta = yn.dot(&yn) / sn.dot(&yn);
    let mut b = DMatrix::<f64>::identity(n, n) * delta;
    for (s, y) in list {
        let s = DVector::from_column_slice(s);
        let y = DVector::from_column_slice(y);
        let bs = &b * &s;
        let sbs = s.dot(&bs);
        b = b - (&bs * bs.transpose()) / sbs + (&y * y.transpose()) / y.dot(&s);
    }
    b
}

/// `argmin_{s in [-1, 1]} |g + lambda s|` on a uniform grid.
pub fn grid_min_abs_subgradient(g: f64, lambda: f64, points: usize) -> f64 {
    (0..=points)
        .map(|i| -1.0 + 2.0 * i as f64 / points as f64)
        .map(|s| g + lambda * s)
        .fold(f64::INFINITY, |best, v| if v.abs() < best.abs() { v } else { best })
}

/// Solves `A x = b` densely.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("nonsingular system")
        .iter()
        .cloned()
        .collect()
}

/// Ground-truth minimizer of `x^T A x / 2 - b^T x + lambda ||x||_1` by cyclic
/// coordinate descent on the dense matrix, run to a fixed point.
pub fn dense_lasso_quadratic(a: &DMatrix<f64>, b: &[f64], lambda: f64, sweeps: usize) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for _ in 0..sweeps {
        let mut moved = 0.0_f64;
        for j in 0..n {
            let r: f64 = (0..n).filter(|&i| i != j).map(|i| a[(j, i)] * x[i]).sum();
            let c = b[j] - r;
            let ajj = a[(j, j)];
            let new = if c > lambda {
                (c - lambda) / ajj
            } else if c < -lambda {
                (c + lambda) / ajj
            } else {
                0.0
            };
            moved = moved.max((new - x[j]).abs());
            x[j] = new;
        }
        if moved == 0.0 {
            break;
        }
    }
    x
}

/// Seeded compact L-BFGS model built from `memory` exact curvature pairs of
/// a random diagonal matrix with entries in `[0.5, 4.5]`, shifted by `0.05`.
pub fn random_lbfgs_model(n: usize, memory: usize, seed: u64) -> HessianModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag: Vec<f64> = (0..n).map(|_| 0.5 + 4.0 * rng.random::<f64>()).collect();
    let mut pairs = CorrectionPairs::new(memory, DEFAULT_CURVATURE_EPS);
    while pairs.len() < memory {
        let s: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = s.iter().zip(&diag).map(|(a, b)| a * b).collect();
        pairs.update(&s, &y).expect("finite pair");
    }
    HessianModel::LbfgsCompact(pairs.compile(n).shifted(0.05))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let x = golden_section(|x| (x - 0.3) * (x - 0.3), -2.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn grid_subgradient() {
        assert!((grid_min_abs_subgradient(1.5, 1.0, 20_000) - 0.5).abs() < 1e-9);
        assert!(grid_min_abs_subgradient(0.3, 1.0, 20_000).abs() < 1e-4);
    }
}
