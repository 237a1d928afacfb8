//! Experiment plumbing: specs, trace files, comparison reports, rate
//! diagnostics and the verification suite.

mod csv;
mod diagnostics;
mod experiment;
mod report;
mod spec;
mod verify;

pub use csv::{emit_trace_csv, parse_trace_csv, read_trace_csv, trace_to_csv, TRACE_HEADER};
pub use diagnostics::{gap_slack, rate_diagnostics, AcceleratedEnvelope, RateBounds, RateReport, MIN_RECORDS};
pub use experiment::{
    reference_fstar, report_from_trace_files, run_experiment, run_labeled, run_on_problem, tolerance_gap, trace_path,
    write_outputs, ExperimentOutcome,
};
pub use report::{default_checkpoints, ComparisonReport, ReportRow};
pub use spec::{
    apply_config_key, parse_checkpoints, parse_experiment_spec, parse_subsolver, validate_checkpoints, AlgorithmRun,
    ExperimentSpec, LoadedProblem, ProblemSource, DEFAULT_LAMBDA,
};
pub use verify::{
    cd_rate_rows, fh_envelope_violations, linear_rate_check, pathology_chain, sigma_floor_margin, verify_suite,
    verify_suite_with, CdRateRow, CheckResult, LinearRateCheck, VerifyLevel, VerifyReport,
};
