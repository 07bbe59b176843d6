//! Simulation allocation for multifidelity surrogates.
//!
//! Given an ensemble of cheap low-fidelity snapshots, pick the few parameter
//! points worth an expensive high-fidelity run, build the bifidelity
//! surrogate from those runs, and measure how well it reconstructs the rest.
//!
//! * [`linalg`]: Gram matrices, SVD-based pseudoinverse, projection residuals.
//! * [`selectors`]: GOMP and the pivoted, leverage and random baselines.
//! * [`bifidelity`]: the surrogate, the error metric and error sweeps.
//! * [`models`]: Burgers and double-pendulum model pairs, planted instances.
//! * [`theory`]: recovery-condition checks and a brute-force oracle.
//! * [`io`]: the `MFA1` ensemble file format.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifidelity;
pub mod error;
pub mod io;
pub mod linalg;
pub mod models;
pub mod selectors;
pub mod theory;

pub use bifidelity::{evaluate_error, fit, sweep, BifidelityModel, Ensemble, ErrorReport};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, GramMatrix, SvdFactors};
pub use selectors::{select, Method, SelectionResult, SelectorConfig, Termination};
