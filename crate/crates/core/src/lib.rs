//! Proximal gradient and proximal quasi-Newton solvers for composite convex
//! problems `F(x) = f(x) + lambda * ||x||_1`.
//!
//! The crate provides
//!
//! - [`dataset`]: LIBSVM ingestion and synthetic fixtures,
//! - [`problem`]: logistic and quadratic smooth losses, the l1 prox and the
//!   minimum-norm subgradient,
//! - [`hessian`]: scaled-identity, scaled-fixed and compact L-BFGS Hessian
//!   models of the form `delta * I + Q W Q^T`,
//! - [`subsolver`]: randomized coordinate descent on the composite quadratic
//!   model plus inner-iteration budget rules,
//! - [`optimizers`]: PGA, APGA (FISTA), inexact PQNA, APQNA and APQNA with a
//!   fixed Hessian,
//! - [`harness`]: trace CSV files, comparison reports, rate diagnostics and
//!   the self-verification suite behind the `proxqn` binary.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod hessian;
pub mod linalg;
pub mod oracles;
pub mod optimizers;
pub mod problem;
pub mod subsolver;

pub use error::{Error, Result};
