//! Comparison tables assembled from recorded traces.
//!
//! A report depends only on the labeled record lists, so regenerating it from
//! stored trace CSVs reproduces the same bytes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::optimizers::Record;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    /// `(iteration, fval)` per checkpoint. Runs that stopped early report
    /// their last iterate.
    pub points: Vec<(usize, f64)>,
    pub final_iter: usize,
    pub final_fval: f64,
    pub elapsed_sec: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub checkpoints: Vec<usize>,
    pub rows: Vec<ReportRow>,
}

/// `{ceil(K/3), ceil(2K/3), K}` for the longest run, with duplicates removed.
pub fn default_checkpoints(max_iter: usize) -> Vec<usize> {
    let k = max_iter.max(1);
    let mut c = vec![k.div_ceil(3), (2 * k).div_ceil(3), k];
    c.dedup();
    c
}

impl ComparisonReport {
    pub fn build(runs: &[(String, Vec<Record>)], checkpoints: Option<&[usize]>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::invalid("report needs at least one run"));
        }
        if let Some((label, _)) = runs.iter().find(|(_, r)| r.is_empty()) {
            return Err(Error::invalid(format!("run `{label}` has no records")));
        }
        let slowest = runs.iter().map(|(_, r)| r.last().map_or(0, |x| x.k)).max().unwrap_or(0);
        let checkpoints = match checkpoints {
            Some(c) => {
                super::spec::validate_checkpoints(c)?;
                c.to_vec()
            }
            None => default_checkpoints(slowest),
        };
        let rows = runs
            .iter()
            .map(|(label, records)| {
                let last = records[records.len() - 1];
                let points = checkpoints
                    .iter()
                    .map(|&c| {
                        // records are sorted by k
                        let idx = records.partition_point(|r| r.k <= c);
                        let r = records[idx.saturating_sub(1)];
                        (r.k, r.fval)
                    })
                    .collect();
                ReportRow {
                    label: label.clone(),
                    points,
                    final_iter: last.k,
                    final_fval: last.fval,
                    elapsed_sec: last.elapsed_sec,
                }
            })
            .collect();
        Ok(ComparisonReport { checkpoints, rows })
    }

    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Checks finiteness, and for labels where `monotone` holds that the final
    /// value is no larger than any checkpoint value.
    pub fn check_invariants(&self, monotone: impl Fn(&str) -> bool) -> Result<()> {
        for row in &self.rows {
            let all_finite = row.final_fval.is_finite() && row.points.iter().all(|p| p.1.is_finite());
            if !all_finite {
                return Err(Error::Numerical(format!("non-finite objective in report row `{}`", row.label)));
            }
            if monotone(&row.label) && row.points.iter().any(|p| row.final_fval > p.1) {
                return Err(Error::Numerical(format!(
                    "monotone run `{}` ends above a checkpoint value",
                    row.label
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max("algorithm".len());
        let mut out = String::new();
        let _ = write!(out, "{:<width$}", "algorithm");
        for c in &self.checkpoints {
            let _ = write!(out, " | {:>7} {:>13}", format!("it@{c}"), "Fval");
        }
        let _ = writeln!(out, " | {:>7} {:>13} {:>10}", "iter", "final Fval", "time (s)");
        let rule = out.trim_end().len();
        let _ = writeln!(out, "{}", "-".repeat(rule));
        for row in &self.rows {
            let _ = write!(out, "{:<width$}", row.label);
            for (k, f) in &row.points {
                let _ = write!(out, " | {k:>7} {f:>13.6e}");
            }
            let _ = writeln!(
                out,
                " | {:>7} {:>13.6e} {:>10.3}",
                row.final_iter, row.final_fval, row.elapsed_sec
            );
        }
        out
    }

    /// One line per checkpoint and one `final` line per run.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,kind,checkpoint,iter,fval,elapsed_sec\n");
        for row in &self.rows {
            for (c, (k, f)) in self.checkpoints.iter().zip(&row.points) {
                let _ = writeln!(out, "{},checkpoint,{c},{k},{f:.16e},", row.label);
            }
            let _ = writeln!(
                out,
                "{},final,,{},{:.16e},{:.16e}",
                row.label, row.final_iter, row.final_fval, row.elapsed_sec
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(fvals: &[f64]) -> Vec<Record> {
        fvals
            .iter()
            .enumerate()
            .map(|(k, &fval)| Record {
                k,
                fval,
                subgrad_inf: 0.0,
                backtracks: 0,
                inner_iters: 0,
                step_scalar: 1.0,
                t_k: 1.0,
                elapsed_sec: k as f64 * 0.5,
            })
            .collect()
    }

    #[test]
    fn default_checkpoints_follow_thirds() {
        assert_eq!(default_checkpoints(862), vec![288, 575, 862]);
        assert_eq!(default_checkpoints(2), vec![1, 2]);
        assert_eq!(default_checkpoints(0), vec![1]);
    }

    #[test]
    fn early_stoppers_report_last_iterate() {
        let runs = vec![
            ("slow".to_string(), records(&[5.0, 4.0, 3.0, 2.0, 1.5, 1.2, 1.0])),
            ("fast".to_string(), records(&[5.0, 2.0, 1.0])),
        ];
        let rep = ComparisonReport::build(&runs, None).unwrap();
        assert_eq!(rep.checkpoints, vec![2, 4, 6]);
        assert_eq!(rep.row("slow").unwrap().points, vec![(2, 3.0), (4, 1.5), (6, 1.0)]);
        assert_eq!(rep.row("fast").unwrap().points, vec![(2, 1.0), (2, 1.0), (2, 1.0)]);
        assert_eq!(rep.row("fast").unwrap().elapsed_sec, 1.0);
        rep.check_invariants(|_| true).unwrap();
        let text = rep.to_text();
        assert!(text.contains("it@4"));
        assert_eq!(rep.to_csv().lines().count(), 1 + 2 * 4);
    }

    #[test]
    fn monotonicity_violation_detected() {
        let runs = vec![("x".to_string(), records(&[3.0, 1.0, 2.0]))];
        let rep = ComparisonReport::build(&runs, Some(&[1])).unwrap();
        assert!(rep.check_invariants(|_| true).is_err());
        assert!(rep.check_invariants(|_| false).is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ComparisonReport::build(&[], None).is_err());
        let runs = vec![("x".to_string(), records(&[1.0]))];
        assert!(ComparisonReport::build(&runs, Some(&[3, 3])).is_err());
    }
}
