//! Proximal gradient, accelerated proximal gradient, proximal quasi-Newton
//! and accelerated proximal quasi-Newton drivers.
//!
//! Every driver starts from `config.x0` (zero by default), logs one
//! [`Record`] per accepted iterate, and stops once the minimum-norm
//! subgradient has shrunk by `tol_rel` relative to the starting point.

mod accelerated;
mod proximal;
mod quasi_newton;
mod trace;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

pub use accelerated::{
    run_apqna, run_apqna_fh, run_apqna_fh_with, run_apqna_with, AlternatingSource, CarryOverSource, FixedSource,
    HessianSource, LbfgsSource,
};
pub use proximal::{run_apga, run_apga_with, run_pga, run_pga_with};
pub use quasi_newton::{run_pqna, run_pqna_with, PqnaHessian};
pub use trace::{IterateRecorder, IterateView, Monitor, NoMonitor, Record, Status, Trace};

use crate::error::{check_dim, Error, Result};
use crate::hessian::{HessianModel, DEFAULT_CURVATURE_EPS, DEFAULT_DENSE_LIMIT, DEFAULT_MEMORY};
use crate::problem::CompositeProblem;
use crate::subsolver::{budget_for_iteration, cd_minimize_eps, exact_solve_oracle, isotropic_solve, SubproblemBudget};

/// Relative slack on sufficient-decrease tests, absorbing rounding in `F`.
pub const DECREASE_SLACK: f64 = 1e-14;
/// Smallest `sigma` the accelerated drivers accept before giving up.
pub const SIGMA_FLOOR: f64 = 1e-300;

/// How subproblems with a non-isotropic `H` are solved. Isotropic models
/// always use the closed-form prox.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsolverKind {
    /// Randomized coordinate descent for `budget_for_iteration(k)` steps.
    RandomizedCd,
    /// Cyclic coordinate descent to a subgradient tolerance.
    Exact { tol: f64 },
}

/// Whether APQNA enforces `sigma_k H_k <= sigma_{k-1} H_{k-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominationMode {
    Strict,
    /// `theta_k = 1` and no domination check.
    Relaxed,
}

impl FromStr for DominationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(DominationMode::Strict),
            "relaxed" => Ok(DominationMode::Relaxed),
            _ => Err(Error::invalid(format!("unknown domination mode `{s}` (expected strict or relaxed)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub beta: f64,
    pub eta: f64,
    pub tol_rel: f64,
    pub max_outer: usize,
    pub sigma_growth: f64,
    pub sigma_init: f64,
    pub mu_init: f64,
    /// Cap on the step size when it is allowed to grow between iterations.
    pub mu_max: f64,
    pub warmup_kbar: usize,
    pub backtrack_cap: usize,
    pub budget: SubproblemBudget,
    pub seed: u64,
    pub memory: usize,
    pub curvature_eps: f64,
    pub domination: DominationMode,
    pub dense_limit: usize,
    pub subsolver: SubsolverKind,
    /// Starting point; zero when absent.
    pub x0: Option<Vec<f64>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            beta: 0.5,
            eta: 0.5,
            tol_rel: 1e-5,
            max_outer: 20_000,
            sigma_growth: 1.015,
            sigma_init: 1.0,
            mu_init: 1.0,
            mu_max: 1e6,
            warmup_kbar: 8,
            backtrack_cap: 60,
            budget: SubproblemBudget::default(),
            seed: 0,
            memory: DEFAULT_MEMORY,
            curvature_eps: DEFAULT_CURVATURE_EPS,
            domination: DominationMode::Relaxed,
            dense_limit: DEFAULT_DENSE_LIMIT,
            subsolver: SubsolverKind::RandomizedCd,
            x0: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0,1), got {}", self.beta));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta must lie in (0,1], got {}", self.eta));
        }
        if !(self.sigma_growth >= 1.0 && self.sigma_growth.is_finite()) {
            return bad(format!("sigma growth must be >= 1, got {}", self.sigma_growth));
        }
        if !(self.sigma_init > 0.0 && self.mu_init > 0.0 && self.mu_max >= self.mu_init) {
            return bad("need sigma_init > 0 and 0 < mu_init <= mu_max".into());
        }
        if !(self.tol_rel >= 0.0) {
            return bad(format!("tolerance must be >= 0, got {}", self.tol_rel));
        }
        if let SubsolverKind::Exact { tol } = self.subsolver {
            if !(tol > 0.0) {
                return bad("exact subsolver tolerance must be > 0".into());
            }
        }
        self.budget.validate()
    }

    pub(crate) fn start(&self, n: usize) -> Result<Vec<f64>> {
        match &self.x0 {
            Some(x) => {
                check_dim(n, x.len())?;
                Ok(x.clone())
            }
            None => Ok(vec![0.0; n]),
        }
    }
}

/// The algorithms exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Pga,
    Apga,
    PqnaLbfgs,
    PqnaFh,
    ApqnaLbfgs,
    ApqnaFh,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Pga,
        Algorithm::Apga,
        Algorithm::PqnaLbfgs,
        Algorithm::PqnaFh,
        Algorithm::ApqnaLbfgs,
        Algorithm::ApqnaFh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pga => "pga",
            Algorithm::Apga => "apga",
            Algorithm::PqnaLbfgs => "pqna-lbfgs",
            Algorithm::PqnaFh => "pqna-fh",
            Algorithm::ApqnaLbfgs => "apqna-lbfgs",
            Algorithm::ApqnaFh => "apqna-fh",
        }
    }

    /// Algorithms whose objective never increases.
    pub fn is_monotone(self) -> bool {
        matches!(self, Algorithm::Pga | Algorithm::PqnaLbfgs | Algorithm::PqnaFh)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::invalid(format!("unknown algorithm `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Runs `algorithm` with its default Hessian handling.
pub fn run_algorithm(algorithm: Algorithm, problem: &CompositeProblem, config: &OptimizerConfig) -> Result<Trace> {
    match algorithm {
        Algorithm::Pga => run_pga(problem, config),
        Algorithm::Apga => run_apga(problem, config),
        Algorithm::PqnaLbfgs => run_pqna(problem, config, PqnaHessian::Lbfgs),
        Algorithm::PqnaFh => run_pqna(problem, config, PqnaHessian::Fixed { warmup: config.warmup_kbar }),
        Algorithm::ApqnaLbfgs => run_apqna(problem, config),
        Algorithm::ApqnaFh => run_apqna_fh(problem, config),
    }
}

/// `F_new - F_old <= eta (Q - F_old)`.
pub fn sufficient_decrease_holds(f_new: f64, f_old: f64, q_val: f64, eta: f64) -> bool {
    f_new - f_old <= eta * (q_val - f_old)
}

/// [`sufficient_decrease_holds`] with [`DECREASE_SLACK`] of relative tolerance.
pub(crate) fn accepts(f_new: f64, f_old: f64, q_val: f64, eta: f64) -> bool {
    f_new - f_old <= eta * (q_val - f_old) + DECREASE_SLACK * f_old.abs().max(1.0)
}

/// `(1 + sqrt(1 + 4 theta t^2)) / 2`
pub fn t_next(t_k: f64, theta_k: f64) -> Result<f64> {
    if !(t_k >= 1.0 && theta_k > 0.0) {
        return Err(Error::invalid(format!("t_next needs t >= 1 and theta > 0 (t={t_k}, theta={theta_k})")));
    }
    Ok(0.5 * (1.0 + (1.0 + 4.0 * theta_k * t_k * t_k).sqrt()))
}

/// `x_k + (t_k - 1) / t_{k+1} * (x_k - x_{k-1})`
pub fn momentum_point(x_k: &[f64], x_prev: &[f64], t_k: f64, t_next: f64) -> Result<Vec<f64>> {
    check_dim(x_k.len(), x_prev.len())?;
    if !(t_next > 0.0) {
        return Err(Error::invalid("t_{k+1} must be > 0"));
    }
    let c = (t_k - 1.0) / t_next;
    Ok(x_k.iter().zip(x_prev).map(|(a, b)| a + c * (a - b)).collect())
}

pub fn check_termination(problem: &CompositeProblem, x_k: &[f64], initial_subgrad_norm: f64, tol_rel: f64) -> Result<bool> {
    check_dim(problem.dim(), x_k.len())?;
    if !(initial_subgrad_norm > 0.0) {
        return Err(Error::invalid("initial subgradient norm must be > 0"));
    }
    let mut grad = vec![0.0; x_k.len()];
    problem.f_and_grad(x_k, &mut grad);
    Ok(problem.subgrad_inf(x_k, &grad) <= tol_rel * initial_subgrad_norm)
}

/// `1 - eta gamma / (gamma + M)`
pub fn theoretical_linear_rate(gamma: f64, big_m: f64, eta: f64) -> Result<f64> {
    if !(gamma > 0.0 && big_m > 0.0 && eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(format!(
            "rate needs gamma > 0, M > 0, eta in (0,1] (gamma={gamma}, M={big_m}, eta={eta})"
        )));
    }
    Ok(1.0 - eta * gamma / (gamma + big_m))
}

/// Point, objective pieces and gradient at one location.
#[derive(Debug, Clone)]
pub(crate) struct Evaluated {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
}

impl Evaluated {
    pub fn at(problem: &CompositeProblem, x: Vec<f64>) -> Self {
        let mut grad = vec![0.0; x.len()];
        let f = problem.f_and_grad(&x, &mut grad);
        Evaluated { x, f, grad }
    }

    pub fn big_f(&self, problem: &CompositeProblem) -> f64 {
        self.f + problem.g(&self.x)
    }
}

/// Subproblem solve shared by the quasi-Newton drivers. Returns the point
/// and the number of coordinate steps taken.
pub(crate) fn solve_subproblem(
    h: &HessianModel,
    at: &Evaluated,
    lambda: f64,
    k: usize,
    config: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, usize)> {
    if let Some(c) = h.isotropic_coef() {
        return Ok((isotropic_solve(c, &at.grad, &at.x, lambda), 0));
    }
    match config.subsolver {
        SubsolverKind::RandomizedCd => {
            let r = budget_for_iteration(k, &config.budget);
            let out = cd_minimize_eps(h, &at.grad, &at.x, lambda, r, rng.next_u64(), config.budget.step_eps)?;
            Ok((out.point, out.steps))
        }
        SubsolverKind::Exact { tol } => Ok((exact_solve_oracle(h, &at.grad, &at.x, lambda, tol)?, 0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sufficient_decrease_examples() {
        assert!(sufficient_decrease_holds(0.8, 1.0, 0.8, 1.0));
        assert!(sufficient_decrease_holds(0.9, 1.0, 0.8, 0.5));
        assert!(!sufficient_decrease_holds(0.95, 1.0, 0.8, 0.5));
    }

    #[test]
    fn t_next_examples() {
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((t_next(1.0, 1.0).unwrap() - golden).abs() < 1e-15);
        // Direct evaluation gives 2.19352710, about 3e-7 below the commonly quoted 2.1935274.
        assert!((t_next(1.6180340, 1.0).unwrap() - 2.1935270960796585).abs() < 1e-12);
        assert!((t_next(1.0, 0.5).unwrap() - (1.0 + 3f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!(t_next(0.5, 1.0).is_err());
        assert!(t_next(1.0, 0.0).is_err());
    }

    #[test]
    fn t_sequence_grows_linearly() {
        let mut t = 1.0;
        for k in 1..=10_000usize {
            assert!(t >= (k as f64 + 1.0) / 2.0 - 1e-12, "k={k} t={t}");
            t = t_next(t, 1.0).unwrap();
        }
    }

    #[test]
    fn momentum_examples() {
        assert_eq!(momentum_point(&[1.0, 2.0], &[5.0, -3.0], 1.0, 1.7).unwrap(), vec![1.0, 2.0]);
        assert_eq!(momentum_point(&[1.0], &[1.0], 3.0, 3.5).unwrap(), vec![1.0]);
        assert!((momentum_point(&[2.0], &[0.0], 2.0, 2.5).unwrap()[0] - 2.8).abs() < 1e-15);
        assert!(momentum_point(&[2.0], &[0.0, 1.0], 2.0, 2.5).is_err());
    }

    #[test]
    fn linear_rate_examples() {
        assert!((theoretical_linear_rate(1.0, 9.0, 1.0).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(theoretical_linear_rate(1.0, 1.0, 1.0).unwrap(), 0.5);
        assert!((theoretical_linear_rate(2.0, 3.0, 0.5).unwrap() - 0.8).abs() < 1e-15);
        assert!(theoretical_linear_rate(0.0, 1.0, 1.0).is_err());
        assert!(theoretical_linear_rate(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("newton".parse::<Algorithm>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let bad = [
            OptimizerConfig { beta: 1.0, ..Default::default() },
            OptimizerConfig { eta: 0.0, ..Default::default() },
            OptimizerConfig { sigma_growth: 0.9, ..Default::default() },
            OptimizerConfig { mu_init: -1.0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
