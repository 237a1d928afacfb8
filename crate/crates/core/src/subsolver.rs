//! Randomized coordinate descent on `Q_H(., v)` with an l1 term, plus the
//! inner-iteration budget rules.
//!
//! For `H = scale * (delta I + Q W Q^T)` the workspace caches `d = u - v` and
//! `r = W Q^T d`, so the smooth-model gradient component
//! `grad_v[j] + scale * (delta d_j + Q_j . r)` and the update of `r` after a
//! move along `e_j` both cost `O(p)`.
//!
//! Coordinates are drawn with a ChaCha8 generator seeded explicitly, using
//! rand's unbiased bounded sampling, so traces are reproducible across
//! platforms.

use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::hessian::{DiagLowRank, HessianModel};
use crate::linalg::{dot, norm_inf};
use crate::problem::{min_norm_component, soft_threshold};

pub const EXACT_SOLVE_CAP: usize = 10_000_000;
/// Sentinel returned by [`theoretical_inner_bound`] when the bound diverges.
pub const INNER_BOUND_SENTINEL: u64 = 1 << 40;

/// Inner-iteration budget `r(k) = max(floor, ceil(min(cap, k / divisor)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemBudget {
    pub cap: usize,
    pub divisor: f64,
    pub floor: usize,
    /// Steps shorter than this count as "tiny"; `n` tiny steps in a row end the solve.
    pub step_eps: f64,
}

impl Default for SubproblemBudget {
    fn default() -> Self {
        SubproblemBudget {
            cap: 1000,
            divisor: 3.0,
            floor: 5,
            step_eps: 1e-16,
        }
    }
}

impl SubproblemBudget {
    pub fn validate(&self) -> Result<()> {
        if self.floor < 1 || self.cap < self.floor {
            return Err(Error::invalid(format!(
                "inner budget needs cap >= floor >= 1 (cap={}, floor={})",
                self.cap, self.floor
            )));
        }
        if !(self.divisor > 0.0) {
            return Err(Error::invalid("inner budget divisor must be > 0"));
        }
        Ok(())
    }
}

pub fn budget_for_iteration(k: usize, budget: &SubproblemBudget) -> usize {
    let r = (budget.cap as f64).min(k as f64 / budget.divisor).ceil() as usize;
    r.max(budget.floor)
}

/// Contraction constant of randomized coordinate descent.
pub fn phi_constant(m: f64, big_m: f64) -> Result<f64> {
    if !(m > 0.0 && big_m > 0.0) {
        return Err(Error::invalid("phi needs m > 0 and M > 0"));
    }
    Ok(if m <= 2.0 * big_m { 1.0 - m / (4.0 * big_m) } else { big_m / m })
}

/// Result of [`theoretical_inner_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InnerBound {
    pub steps: u64,
    /// The bound diverged and was clamped at [`INNER_BOUND_SENTINEL`].
    pub clamped: bool,
}

/// `ceil(k log(k / ell) / log(1 / alpha_n))`, clamped below at zero.
pub fn theoretical_inner_bound(k: usize, alpha_n: f64, ell: f64) -> Result<InnerBound> {
    if k < 1 || !(alpha_n > 0.0 && alpha_n < 1.0) || !(ell > 0.0) {
        return Err(Error::invalid(format!(
            "inner bound needs k >= 1, alpha_n in (0,1), ell > 0 (k={k}, alpha_n={alpha_n}, ell={ell})"
        )));
    }
    let denom = (1.0 / alpha_n).ln();
    let raw = k as f64 * (k as f64 / ell).ln() / denom;
    if !raw.is_finite() || raw >= INNER_BOUND_SENTINEL as f64 {
        return Ok(InnerBound {
            steps: INNER_BOUND_SENTINEL,
            clamped: true,
        });
    }
    // Guard against ceil(34.0000000001) style noise from the log ratio.
    let steps = if raw <= 0.0 { 0 } else { (raw - 1e-9 * raw.abs()).ceil() as u64 };
    Ok(InnerBound { steps, clamped: false })
}

/// Exact minimizer `z` of `a z^2 / 2 + b z + lambda |u_j + z|`.
pub fn coordinate_minimizer(a: f64, b: f64, u_j: f64, lambda: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Numerical(format!("nonpositive Hessian diagonal {a}")));
    }
    Ok(soft_threshold(u_j - b / a, lambda / a) - u_j)
}

/// State of one coordinate descent solve of `min_u Q_H(u, v)`.
pub struct CdWorkspace<'a> {
    scale: f64,
    base: Cow<'a, DiagLowRank>,
    grad_v: &'a [f64],
    v: &'a [f64],
    lambda: f64,
    u: Vec<f64>,
    d: Vec<f64>,
    r: Vec<f64>,
    steps: usize,
}

impl<'a> CdWorkspace<'a> {
    pub fn new(h: &'a HessianModel, grad_v: &'a [f64], v: &'a [f64], lambda: f64) -> Result<Self> {
        check_dim(h.dim(), v.len())?;
        check_dim(h.dim(), grad_v.len())?;
        let (scale, base) = h.as_scaled_low_rank();
        let p = base.rank();
        Ok(CdWorkspace {
            scale,
            base,
            grad_v,
            v,
            lambda,
            u: v.to_vec(),
            d: vec![0.0; v.len()],
            r: vec![0.0; p],
            steps: 0,
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.u
    }

    pub fn into_point(self) -> Vec<f64> {
        self.u
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Cached `j`-th component of `grad_v + H (u - v)`.
    #[inline]
    pub fn smooth_grad(&self, j: usize) -> f64 {
        self.grad_v[j] + self.scale * (self.base.delta() * self.d[j] + dot(self.base.q_row(j), &self.r))
    }

    #[inline]
    pub fn diag(&self, j: usize) -> f64 {
        self.scale * self.base.diag(j)
    }

    /// Exact minimization along `e_j`; returns the step `z`.
    pub fn step(&mut self, j: usize) -> Result<f64> {
        let a = self.diag(j);
        let b = self.smooth_grad(j);
        let z = coordinate_minimizer(a, b, self.u[j], self.lambda)?;
        if z != 0.0 {
            self.u[j] += z;
            self.d[j] = self.u[j] - self.v[j];
            for (ri, &qw) in self.r.iter_mut().zip(self.base.qw_row(j)) {
                *ri += z * qw;
            }
        }
        self.steps += 1;
        #[cfg(debug_assertions)]
        if self.steps % 100 == 0 {
            self.check_cache();
        }
        Ok(z)
    }

    /// `grad_v + H (u - v)` recomputed from scratch.
    pub fn direct_smooth_grad(&self) -> Vec<f64> {
        let hd = self.base.apply(&self.d);
        self.grad_v
            .iter()
            .zip(hd)
            .map(|(g, x)| g + self.scale * x)
            .collect()
    }

    /// Largest deviation between the cached and recomputed model gradient.
    pub fn cache_error(&self) -> f64 {
        let direct = self.direct_smooth_grad();
        (0..self.u.len())
            .map(|j| (self.smooth_grad(j) - direct[j]).abs() / (1.0 + direct[j].abs()))
            .fold(0.0, f64::max)
    }

    #[cfg(debug_assertions)]
    fn check_cache(&self) {
        let err = self.cache_error();
        debug_assert!(err <= 1e-10, "coordinate descent cache drifted by {err:e}");
    }

    /// Infinity norm of the subproblem's minimum-norm subgradient at `u`.
    pub fn subgrad_inf(&self) -> f64 {
        let g = self.direct_smooth_grad();
        let comps: Vec<f64> = g
            .iter()
            .zip(&self.u)
            .map(|(&gj, &uj)| min_norm_component(gj, uj, self.lambda))
            .collect();
        norm_inf(&comps)
    }
}

/// Single coordinate step on an existing workspace; returns the new `u_j`.
pub fn cd_coordinate_step(ws: &mut CdWorkspace<'_>, j: usize) -> Result<f64> {
    ws.step(j)?;
    Ok(ws.point()[j])
}

/// Output of [`cd_minimize`].
#[derive(Debug, Clone)]
pub struct CdOutcome {
    pub point: Vec<f64>,
    pub steps: usize,
}

/// `r` uniformly random coordinate steps from `u_0 = v`.
pub fn cd_minimize(h: &HessianModel, grad_v: &[f64], v: &[f64], lambda: f64, r: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(cd_minimize_eps(h, grad_v, v, lambda, r, seed, SubproblemBudget::default().step_eps)?.point)
}

/// [`cd_minimize`] with an explicit tiny-step threshold: after `n`
/// consecutive steps shorter than `step_eps` the solve stops early.
pub fn cd_minimize_eps(
    h: &HessianModel,
    grad_v: &[f64],
    v: &[f64],
    lambda: f64,
    r: usize,
    seed: u64,
    step_eps: f64,
) -> Result<CdOutcome> {
    let mut ws = CdWorkspace::new(h, grad_v, v, lambda)?;
    let n = v.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tiny_run = 0usize;
    for _ in 0..r {
        let j = rng.random_range(0..n);
        let z = ws.step(j)?;
        if z.abs() < step_eps {
            tiny_run += 1;
            if tiny_run >= n {
                break;
            }
        } else {
            tiny_run = 0;
        }
    }
    let steps = ws.steps();
    Ok(CdOutcome {
        point: ws.into_point(),
        steps,
    })
}

/// Ground-truth subproblem solution by cyclic coordinate descent, run until
/// the subproblem's minimum-norm subgradient is at most `tol` in the
/// infinity norm.
pub fn exact_solve_oracle(h: &HessianModel, grad_v: &[f64], v: &[f64], lambda: f64, tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be > 0"));
    }
    let mut ws = CdWorkspace::new(h, grad_v, v, lambda)?;
    let n = v.len();
    loop {
        if ws.subgrad_inf() <= tol {
            return Ok(ws.into_point());
        }
        if ws.steps() + n > EXACT_SOLVE_CAP {
            return Err(Error::IterationCap { cap: EXACT_SOLVE_CAP });
        }
        for j in 0..n {
            ws.step(j)?;
        }
    }
}

/// Closed-form solution when `H = c I`: `soft(v - grad_v / c, lambda / c)`.
pub fn isotropic_solve(coef: f64, grad_v: &[f64], v: &[f64], lambda: f64) -> Vec<f64> {
    v.iter()
        .zip(grad_v)
        .map(|(&vj, &gj)| soft_threshold(vj - gj / coef, lambda / coef))
        .collect()
}
