//! Column subset selectors.
//!
//! Six strategies share one interface: group orthogonal matching pursuit
//! (`gomp`), pivoted Cholesky on the Gram matrix (`chol`), column-pivoted QR
//! (`qr`), maximum-residual-entry LU-style pivoting (`lu`), deterministic
//! leverage scores (`lev`) and uniform random sampling (`rand`).
//!
//! Indices are 0-based throughout this crate. Ties are always broken toward
//! the smallest index.

mod gomp;
mod leverage;
mod pivoted;
mod random;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};

pub use gomp::select_gomp;
pub use leverage::{leverage_scores, select_leverage};
pub use pivoted::{select_pivoted_cholesky, select_pivoted_lu, select_pivoted_qr};
pub use random::select_random;

/// Pivot magnitudes below this fraction of the first step's magnitude end a
/// pivoted selection with [`Termination::ExhaustedRank`].
pub const PIVOT_RELATIVE_TOL: f64 = 1e-12;

/// GOMP treats a winning correlation below this fraction of the initial
/// maximum correlation as an exhausted range.
pub const GOMP_RANK_RELATIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "gomp")]
    Gomp,
    #[serde(rename = "chol")]
    Cholesky,
    #[serde(rename = "qr")]
    Qr,
    #[serde(rename = "lu")]
    Lu,
    #[serde(rename = "lev")]
    Leverage,
    #[serde(rename = "rand")]
    Random,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Random,
        Method::Leverage,
        Method::Qr,
        Method::Cholesky,
        Method::Lu,
        Method::Gomp,
    ];

    /// Short name used in reports and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Method::Gomp => "gomp",
            Method::Cholesky => "chol",
            Method::Qr => "qr",
            Method::Lu => "lu",
            Method::Leverage => "lev",
            Method::Random => "rand",
        }
    }

    /// Whether successive subset sizes are prefixes of one run.
    pub fn is_greedy(self) -> bool {
        matches!(
            self,
            Method::Gomp | Method::Cholesky | Method::Qr | Method::Lu
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gomp" => Ok(Method::Gomp),
            "chol" | "cholesky" => Ok(Method::Cholesky),
            "qr" => Ok(Method::Qr),
            "lu" => Ok(Method::Lu),
            "lev" | "leverage" => Ok(Method::Leverage),
            "rand" | "random" => Ok(Method::Random),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}`; valid methods: rand, lev, qr, chol, lu, gomp"
            ))),
        }
    }
}

/// Parameters for one selector run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub method: Method,
    /// Maximum number of columns to select.
    pub target_size: usize,
    /// GOMP sparsity parameter; `None` means unbounded (no `‖Bᵀ‖₂,₁` stop).
    pub gomp_lambda: Option<f64>,
    /// GOMP precision parameter.
    pub gomp_epsilon: f64,
    /// Leverage rank `k`; defaults to the target size.
    pub leverage_rank: Option<usize>,
    pub rng_seed: u64,
    /// Scale columns to unit norm before selecting.
    pub normalize_columns: bool,
}

impl SelectorConfig {
    pub fn new(method: Method, target_size: usize) -> Self {
        SelectorConfig {
            method,
            target_size,
            gomp_lambda: None,
            gomp_epsilon: 0.0,
            leverage_rank: None,
            rng_seed: 0,
            normalize_columns: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.gomp_epsilon = epsilon;
        self
    }

    pub fn with_lambda(mut self, lambda: Option<f64>) -> Self {
        self.gomp_lambda = lambda;
        self
    }

    pub fn with_leverage_rank(mut self, k: Option<usize>) -> Self {
        self.leverage_rank = k;
        self
    }

    pub fn leverage_rank(&self) -> usize {
        self.leverage_rank.unwrap_or(self.target_size)
    }

    pub fn validate(&self, ncols: usize) -> Result<()> {
        if self.target_size == 0 || self.target_size > ncols {
            return Err(Error::InvalidArgument(format!(
                "target size must lie in 1..={ncols}, got {}",
                self.target_size
            )));
        }
        if !(self.gomp_epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gomp epsilon must be non-negative, got {}",
                self.gomp_epsilon
            )));
        }
        if let Some(lambda) = self.gomp_lambda {
            if !(lambda > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "gomp lambda must be positive, got {lambda}"
                )));
            }
        }
        if self.leverage_rank == Some(0) {
            return Err(Error::InvalidArgument(
                "leverage rank must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTarget,
    EpsilonStop,
    LambdaStop,
    ExhaustedRank,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::ReachedTarget => "reached_target",
            Termination::EpsilonStop => "epsilon_stop",
            Termination::LambdaStop => "lambda_stop",
            Termination::ExhaustedRank => "exhausted_rank",
        })
    }
}

/// Outcome of one selector run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Selected column indices in the order they were chosen.
    pub ordered_indices: Vec<usize>,
    /// The criterion value that won each step.
    pub step_scores: Vec<f64>,
    /// GOMP only: rows of the final coefficient matrix for the active set, in selection order.
    pub coefficients: Option<DenseMatrix>,
    pub termination: Termination,
}

impl SelectionResult {
    pub fn len(&self) -> usize {
        self.ordered_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_indices.is_empty()
    }

    /// The first `m` picks (all of them if fewer were made).
    pub fn prefix(&self, m: usize) -> &[usize] {
        &self.ordered_indices[..m.min(self.ordered_indices.len())]
    }

    /// The full `n × n` coefficient matrix with zero rows outside the active set.
    pub fn full_coefficients(&self, n: usize) -> Option<DenseMatrix> {
        let rows = self.coefficients.as_ref()?;
        let mut b = DenseMatrix::zeros(n, rows.ncols());
        for (r, &i) in self.ordered_indices.iter().enumerate() {
            b.set_row(i, &rows.row(r));
        }
        Some(b)
    }
}

/// Runs the configured selector on a raw ensemble (one column per snapshot).
pub fn select(ensemble: &DenseMatrix, config: &SelectorConfig) -> Result<SelectionResult> {
    linalg::check_finite(ensemble)?;
    config.validate(ensemble.ncols())?;
    let normalized;
    let a = if config.normalize_columns {
        normalized = linalg::normalize_columns(ensemble);
        &normalized
    } else {
        ensemble
    };
    let m = config.target_size;
    match config.method {
        Method::Gomp => select_gomp(&linalg::gram(a)?, config),
        Method::Cholesky => select_pivoted_cholesky(&linalg::gram(a)?, m),
        Method::Qr => select_pivoted_qr(a, m),
        Method::Lu => select_pivoted_lu(a, m),
        Method::Leverage => select_leverage(a, m, config.leverage_rank()),
        Method::Random => select_random(a.ncols(), m, config.rng_seed),
    }
}

/// Relaxed column-subset objective `‖A − AB‖²_F + λ‖Bᵀ‖₂,₁`.
pub fn group_lasso_objective(ensemble: &DenseMatrix, b: &DenseMatrix, lambda: f64) -> Result<f64> {
    let n = ensemble.ncols();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "coefficient matrix must be {n}x{n}, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let fit = (ensemble - ensemble * b).norm_squared();
    let penalty: f64 = b.row_iter().map(|r| r.norm()).sum();
    Ok(fit + lambda * penalty)
}

/// Scores within this relative distance of the best score count as tied.
pub const TIE_RELATIVE_TOL: f64 = 1e-12;

// Index of the largest value among candidates. Values within
// TIE_RELATIVE_TOL of the maximum are ties and go to the smallest index.
pub(crate) fn argmax_excluding(values: &[f64], excluded: &[bool]) -> Option<(usize, f64)> {
    let max = values
        .iter()
        .zip(excluded)
        .filter(|(_, ex)| !**ex)
        .map(|(v, _)| *v)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        })?;
    let cutoff = max - TIE_RELATIVE_TOL * max.abs();
    values
        .iter()
        .zip(excluded)
        .enumerate()
        .find(|(_, (v, ex))| !**ex && **v >= cutoff)
        .map(|(i, (v, _))| (i, *v))
}
