//! Rate fitting and bound checks on recorded traces.

use crate::error::{Error, Result};
use crate::optimizers::Record;

/// Minimum number of records a trace needs before rates are fitted.
pub const MIN_RECORDS: usize = 10;

/// Envelopes to test at every iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RateBounds {
    /// `rho` of `F(x_k) - F* <= rho^k (F(x_0) - F*)`.
    pub linear_rho: Option<f64>,
    pub accelerated: Option<AcceleratedEnvelope>,
}

/// `F(x_k) - F* <= dist0_sq / (2 s_k t_k^2)` where `s_k` is the record's step
/// scalar (`mu_k` for FISTA, `sigma_k` for the fixed-Hessian method) and
/// `dist0_sq` is the squared distance from the start of the accelerated
/// phase to the minimizer in the metric of the first model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceleratedEnvelope {
    pub dist0_sq: f64,
    /// Records with `k <= start_k` belong to a warmup phase and are skipped.
    pub start_k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `exp` of the least-squares slope of `ln(F(x_k) - F*)` over the tail
    /// half of the trace, or `None` if fewer than two tail gaps are positive.
    pub fitted_ratio: Option<f64>,
    /// Per-record flags `(k, holds)` for the linear envelope.
    pub linear: Option<Vec<(usize, bool)>>,
    pub accelerated: Option<Vec<(usize, bool)>>,
}

impl RateReport {
    pub fn linear_violations(&self) -> usize {
        count_false(&self.linear)
    }

    pub fn accelerated_violations(&self) -> usize {
        count_false(&self.accelerated)
    }
}

fn count_false(flags: &Option<Vec<(usize, bool)>>) -> usize {
    flags.as_ref().map_or(0, |v| v.iter().filter(|f| !f.1).count())
}

/// Absolute slack for comparing objective gaps against envelopes.
pub fn gap_slack(f_star: f64) -> f64 {
    1e-13 * f_star.abs().max(1.0)
}

pub fn rate_diagnostics(records: &[Record], f_star: f64, bounds: &RateBounds) -> Result<RateReport> {
    if records.len() < MIN_RECORDS {
        return Err(Error::invalid(format!(
            "trace has {} records; rate fitting needs at least {MIN_RECORDS}",
            records.len()
        )));
    }
    let min_f = records.iter().map(|r| r.fval).fold(f64::INFINITY, f64::min);
    if f_star > min_f + 1e-12 {
        return Err(Error::invalid(format!(
            "reference F* = {f_star:e} exceeds the smallest traced value {min_f:e}"
        )));
    }
    let slack = gap_slack(f_star);
    let gap0 = records[0].fval - f_star;

    let tail = &records[records.len() / 2..];
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|r| r.fval - f_star > 0.0)
        .map(|r| (r.k as f64, (r.fval - f_star).ln()))
        .collect();
    let fitted_ratio = (pts.len() >= 2).then(|| least_squares_slope(&pts).exp());

    let linear = bounds.linear_rho.map(|rho| {
        records
            .iter()
            .map(|r| (r.k, r.fval - f_star <= rho.powi(r.k as i32) * gap0 + slack))
            .collect()
    });
    let accelerated = bounds.accelerated.map(|env| {
        records
            .iter()
            .filter(|r| r.k > env.start_k)
            .map(|r| {
                let bound = env.dist0_sq / (2.0 * r.step_scalar * r.t_k * r.t_k);
                (r.k, r.fval - f_star <= bound + slack)
            })
            .collect()
    });
    Ok(RateReport {
        fitted_ratio,
        linear,
        accelerated,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthesize_quadratic;
    use crate::optimizers::{run_apga, run_pga, OptimizerConfig};
    use crate::oracles::dense_lasso_quadratic;
    use crate::problem::CompositeProblem;

    fn geometric(ratio: f64, len: usize) -> Vec<Record> {
        (0..len)
            .map(|k| Record {
                k,
                fval: 1.0 + ratio.powi(k as i32),
                subgrad_inf: 0.0,
                backtracks: 0,
                inner_iters: 0,
                step_scalar: 1.0,
                t_k: 1.0,
                elapsed_sec: 0.0,
            })
            .collect()
    }

    #[test]
    fn recovers_geometric_ratio() {
        let rep = rate_diagnostics(&geometric(0.9, 60), 1.0, &RateBounds::default()).unwrap();
        assert!((rep.fitted_ratio.unwrap() - 0.9).abs() <= 1e-6);
        assert!(rep.linear.is_none());
    }

    #[test]
    fn linear_flags() {
        let recs = geometric(0.9, 30);
        let ok = RateBounds {
            linear_rho: Some(0.9),
            ..Default::default()
        };
        assert_eq!(rate_diagnostics(&recs, 1.0, &ok).unwrap().linear_violations(), 0);
        let tight = RateBounds {
            linear_rho: Some(0.8),
            ..Default::default()
        };
        assert_eq!(rate_diagnostics(&recs, 1.0, &tight).unwrap().linear_violations(), 29);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(rate_diagnostics(&geometric(0.5, 9), 1.0, &RateBounds::default()).is_err());
        assert!(rate_diagnostics(&geometric(0.5, 20), 1.5, &RateBounds::default()).is_err());
    }

    #[test]
    fn pga_on_strongly_convex_problem_is_linear() {
        let q = synthesize_quadratic(20, 0.5, 5.0, 3).unwrap();
        let p = CompositeProblem::quadratic(&q, 0.05).unwrap();
        let xs = dense_lasso_quadratic(&q.matrix, &q.b, 0.05, 100_000);
        let f_star = p.value(&xs);
        let tr = run_pga(
            &p,
            &OptimizerConfig {
                tol_rel: 1e-7,
                ..Default::default()
            },
        )
        .unwrap();
        let rep = rate_diagnostics(&tr.records, f_star, &RateBounds::default()).unwrap();
        assert!(rep.fitted_ratio.unwrap() < 1.0);
    }

    #[test]
    fn apga_stays_inside_fista_envelope() {
        let q = synthesize_quadratic(30, 0.01, 4.0, 8).unwrap();
        let p = CompositeProblem::quadratic(&q, 0.0).unwrap();
        let xs = q.unregularized_minimizer();
        let f_star = p.value(&xs);
        let cfg = OptimizerConfig {
            mu_init: 0.25,
            tol_rel: 1e-6,
            ..Default::default()
        };
        let tr = run_apga(&p, &cfg).unwrap();
        assert!(tr.records.iter().all(|r| r.backtracks == 0));
        let bounds = RateBounds {
            accelerated: Some(AcceleratedEnvelope {
                dist0_sq: xs.iter().map(|x| x * x).sum(),
                start_k: 0,
            }),
            ..Default::default()
        };
        let rep = rate_diagnostics(&tr.records, f_star.min(tr.final_fval()), &bounds).unwrap();
        assert_eq!(rep.accelerated_violations(), 0);
        assert!(!rep.accelerated.unwrap().is_empty());
    }
}
