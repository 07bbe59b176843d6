//! Checks for the exact- and noisy-recovery guarantees of GOMP, and an
//! exhaustive column-subset oracle for small matrices.
//!
//! The verifiers take a known (planted or hypothesized) basis set `S_g`; the
//! consistency condition cannot be checked without one.

use itertools::Itertools;
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, SvdFactors};
use crate::models::{synthetic_recovery_instance, SyntheticSpec};
use crate::selectors::{select_gomp, Method, SelectorConfig};

/// Basis columns whose smallest singular value falls below this fraction of
/// the largest are rejected as rank deficient.
pub const BASIS_RANK_TOL: f64 = 1e-10;

/// Upper limit on the number of subsets [`brute_force_cssp`] will enumerate.
pub const MAX_SUBSETS: u64 = 1_000_000;

/// GOMP is run with `ε = EPSILON_MARGIN × threshold` in noisy recovery trials,
/// since the threshold is a strict lower bound.
pub const EPSILON_MARGIN: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionsMet {
    /// `D̄ < 1`.
    pub consistency: bool,
    /// `λ̄ > 0`.
    pub basis_conditioned: bool,
    /// Minimum basis-row coefficient mass exceeds `ε√8 / λ̄`.
    pub row_mass: bool,
    pub all: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryDiagnostics {
    pub d_bar: f64,
    pub lambda_bar: f64,
    /// Smallest admissible GOMP stopping tolerance; infinite (JSON `null`) when `D̄ ≥ 1`.
    pub epsilon_threshold: f64,
    pub min_row_mass: f64,
    /// `ε√8 / λ̄` evaluated at the threshold.
    pub required_row_mass: f64,
    pub conditions_met: ConditionsMet,
}

fn basis_matrix(a: &DenseMatrix, basis: &[usize]) -> Result<DenseMatrix> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("basis set is empty".into()));
    }
    linalg::check_subset(basis, a.ncols())?;
    Ok(a.select_columns(basis))
}

/// Least-squares expansion coefficients `(A_Sg)† a_j` of every non-basis
/// column, as a `|S_g| × (n − |S_g|)` matrix in ascending column order.
pub fn expansion_matrix(a: &DenseMatrix, basis: &[usize]) -> Result<DenseMatrix> {
    let a_s = basis_matrix(a, basis)?;
    let svd = SvdFactors::compute(&a_s)?;
    let sigma_max = svd.sigma_max();
    let sigma_min = svd.singular_values[svd.singular_values.len() - 1];
    if basis.len() > a.nrows() || !(sigma_min > BASIS_RANK_TOL * sigma_max) {
        return Err(Error::RankDeficient {
            sigma_min: if basis.len() > a.nrows() {
                0.0
            } else {
                sigma_min
            },
            sigma_max,
        });
    }
    let others: Vec<usize> = (0..a.ncols()).filter(|j| !basis.contains(j)).collect();
    Ok(svd.pseudoinverse() * a.select_columns(&others))
}

/// `D̄`: the largest ℓ₁ norm over the columns of `D`.
pub fn consistency_bound(d: &DenseMatrix) -> f64 {
    d.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max)
}

/// `λ̄`: smallest eigenvalue of the basis Gram matrix `A_Sgᵀ A_Sg`.
pub fn lambda_min(a: &DenseMatrix, basis: &[usize]) -> Result<f64> {
    let a_s = basis_matrix(a, basis)?;
    let eig = SymmetricEigen::new(a_s.tr_mul(&a_s));
    Ok(eig.eigenvalues.min().max(0.0))
}

/// Smallest stopping tolerance for noisy recovery,
/// `σ √(2nd · ln(2nd/η)) / (1 − D̄)`; infinite when `D̄ ≥ 1`.
pub fn epsilon_threshold(sigma: f64, eta: f64, n: usize, d: usize, d_bar: f64) -> f64 {
    if d_bar >= 1.0 {
        return f64::INFINITY;
    }
    let nd = (n * d) as f64;
    sigma * (2.0 * nd * (2.0 * nd / eta).ln()).sqrt() / (1.0 - d_bar)
}

/// Entrywise coefficient error bound `σ √(2 ln(2|S_g|/η) / λ̄)` for noisy recovery.
pub fn coefficient_error_bound(sigma: f64, eta: f64, basis_size: usize, lambda_bar: f64) -> f64 {
    sigma * (2.0 * (2.0 * basis_size as f64 / eta).ln() / lambda_bar).sqrt()
}

/// Evaluates the noisy-recovery hypotheses for expansion coefficients `D`
/// (non-basis columns only, as returned by [`expansion_matrix`]).
///
/// The row mass of basis row `i` is taken over all `n` columns, so the
/// basis column's own unit coefficient contributes 1.
pub fn noisy_thresholds(
    d: &DenseMatrix,
    sigma: f64,
    eta: f64,
    n: usize,
    dim: usize,
    lambda_bar: f64,
) -> Result<RecoveryDiagnostics> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "eta must lie in (0, 0.5), got {eta}"
        )));
    }
    let d_bar = consistency_bound(d);
    let eps = epsilon_threshold(sigma, eta, n, dim, d_bar);
    let min_row_mass = d
        .row_iter()
        .map(|r| (1.0 + r.norm_squared()).sqrt())
        .fold(f64::INFINITY, f64::min);
    let required_row_mass = if lambda_bar > 0.0 {
        eps * 8f64.sqrt() / lambda_bar
    } else {
        f64::INFINITY
    };
    let consistency = d_bar < 1.0;
    let basis_conditioned = lambda_bar > 0.0;
    let row_mass = min_row_mass > required_row_mass;
    Ok(RecoveryDiagnostics {
        d_bar,
        lambda_bar,
        epsilon_threshold: eps,
        min_row_mass,
        required_row_mass,
        conditions_met: ConditionsMet {
            consistency,
            basis_conditioned,
            row_mass,
            all: consistency && basis_conditioned && row_mass,
        },
    })
}

/// Runs the full chain: expansion matrix, `D̄`, `λ̄`, thresholds.
pub fn verify(
    a: &DenseMatrix,
    basis: &[usize],
    sigma: f64,
    eta: f64,
) -> Result<RecoveryDiagnostics> {
    linalg::check_finite(a)?;
    let d = expansion_matrix(a, basis)?;
    let lambda_bar = lambda_min(a, basis)?;
    noisy_thresholds(&d, sigma, eta, a.ncols(), a.nrows(), lambda_bar)
}

/// Outcome of one noisy-recovery experiment on a planted instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTrial {
    pub seed: u64,
    pub selected: Vec<usize>,
    pub planted: Vec<usize>,
    pub set_recovered: bool,
    pub max_coefficient_error: f64,
    pub coefficient_bound: f64,
    pub epsilon: f64,
    pub diagnostics: RecoveryDiagnostics,
}

impl RecoveryTrial {
    /// Basis identified and every coefficient within the error bound.
    pub fn success(&self) -> bool {
        self.set_recovered && self.max_coefficient_error <= self.coefficient_bound
    }
}

/// Draws a planted instance and runs GOMP with `ε` just above the threshold
/// computed from the planted coefficients, no size cap and unbounded `λ`.
pub fn noisy_recovery_trial(spec: &SyntheticSpec, seed: u64, eta: f64) -> Result<RecoveryTrial> {
    let inst = synthetic_recovery_instance(spec, seed)?;
    let a = &inst.matrix;
    let lambda_bar = lambda_min(a, &inst.basis)?;
    let diagnostics = noisy_thresholds(
        &inst.coefficients,
        spec.noise_sigma,
        eta,
        spec.n,
        spec.d,
        lambda_bar,
    )?;
    let epsilon = EPSILON_MARGIN * diagnostics.epsilon_threshold;
    let config = SelectorConfig::new(Method::Gomp, spec.n).with_epsilon(epsilon);
    let result = select_gomp(&linalg::gram(a)?, &config)?;

    let mut selected = result.ordered_indices.clone();
    selected.sort_unstable();
    let set_recovered = selected == inst.basis;
    let b = result
        .full_coefficients(spec.n)
        .expect("gomp returns coefficients");
    let max_coefficient_error = (b - inst.full_coefficients()).amax();
    Ok(RecoveryTrial {
        seed,
        selected,
        planted: inst.basis,
        set_recovered,
        max_coefficient_error,
        coefficient_bound: coefficient_error_bound(
            spec.noise_sigma,
            eta,
            spec.basis_size,
            lambda_bar,
        ),
        epsilon,
        diagnostics,
    })
}

/// Empirical success rate of [`noisy_recovery_trial`] over `seeds`, to set
/// against the guaranteed `1 − 2η`.
pub fn monte_carlo_noisy_recovery(
    spec: &SyntheticSpec,
    seeds: impl IntoIterator<Item = u64>,
    eta: f64,
) -> Result<f64> {
    let mut trials = 0usize;
    let mut successes = 0usize;
    for seed in seeds {
        trials += 1;
        if noisy_recovery_trial(spec, seed, eta)?.success() {
            successes += 1;
        }
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("no seeds given".into()));
    }
    Ok(successes as f64 / trials as f64)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return acc;
        }
    }
    acc
}

/// Optimal size-m column subset by exhaustive enumeration. Ties go to the
/// lexicographically smallest subset.
pub fn brute_force_cssp(a: &DenseMatrix, m: usize) -> Result<(Vec<usize>, f64)> {
    linalg::check_finite(a)?;
    let n = a.ncols();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "subset size must lie in 1..={n}, got {m}"
        )));
    }
    if binomial(n, m) > MAX_SUBSETS as u128 {
        return Err(Error::TooManySubsets {
            n,
            m,
            limit: MAX_SUBSETS,
        });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in (0..n).combinations(m) {
        let r = linalg::projection_residual(a, &subset)?;
        if best.as_ref().is_none_or(|(_, b)| r < *b) {
            best = Some((subset, r));
        }
    }
    Ok(best.expect("at least one subset"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy() -> DenseMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DenseMatrix::from_column_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, h, h])
    }

    #[test]
    fn expansion_of_orthonormal_basis() {
        let a =
            DenseMatrix::from_column_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.3, 0.4, 0.0]);
        let d = expansion_matrix(&a, &[0, 1]).unwrap();
        assert_relative_eq!(d[(0, 0)], 0.3, epsilon = 1e-15);
        assert_relative_eq!(d[(1, 0)], 0.4, epsilon = 1e-15);
        let resid = a.select_columns(&[0, 1]) * &d - a.column(2);
        assert!(resid.norm() < 1e-10);
        assert_relative_eq!(consistency_bound(&d), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn expansion_rejects_rank_deficient_basis() {
        let a = DenseMatrix::from_column_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            expansion_matrix(&a, &[0, 1]),
            Err(Error::RankDeficient { .. })
        ));
        assert!(expansion_matrix(&a, &[]).is_err());
    }

    #[test]
    fn consistency_examples() {
        assert_eq!(consistency_bound(&DenseMatrix::zeros(2, 3)), 0.0);
        let d = expansion_matrix(&toy(), &[0, 1]).unwrap();
        assert_relative_eq!(consistency_bound(&d), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn lambda_min_examples() {
        assert_relative_eq!(
            lambda_min(&DenseMatrix::identity(3, 3), &[0, 2]).unwrap(),
            1.0
        );
        let (s, c) = (60f64.to_radians().sin(), 60f64.to_radians().cos());
        let a = DenseMatrix::from_column_slice(2, 2, &[1.0, 0.0, c, s]);
        assert_relative_eq!(lambda_min(&a, &[0, 1]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn threshold_arithmetic() {
        let d = DenseMatrix::from_column_slice(2, 1, &[0.3, 0.4]);
        let diag = noisy_thresholds(&d, 1e-4, 0.1, 40, 10, 1.0).unwrap();
        // 1e-4 · √(800 · ln 8000) / 0.3, evaluated independently.
        assert!((diag.epsilon_threshold - 0.028264145832032454).abs() < 1e-12);
        assert!(diag.conditions_met.all);

        let zero = noisy_thresholds(&d, 0.0, 0.1, 40, 10, 1.0).unwrap();
        assert_eq!(zero.epsilon_threshold, 0.0);
        assert_eq!(zero.required_row_mass, 0.0);

        let close = DenseMatrix::from_column_slice(2, 1, &[0.5, 0.4999999]);
        assert!(
            noisy_thresholds(&close, 1e-4, 0.1, 40, 10, 1.0)
                .unwrap()
                .epsilon_threshold
                > 1e3
        );

        let over = DenseMatrix::from_column_slice(2, 1, &[0.7, 0.7]);
        let diag = noisy_thresholds(&over, 1e-4, 0.1, 40, 10, 1.0).unwrap();
        assert!(diag.epsilon_threshold.is_infinite());
        assert!(!diag.conditions_met.consistency && !diag.conditions_met.all);

        assert!(noisy_thresholds(&d, 1e-4, 0.5, 40, 10, 1.0).is_err());
        assert!(noisy_thresholds(&d, -1.0, 0.1, 40, 10, 1.0).is_err());
    }

    #[test]
    fn diagnostics_json_shape() {
        let d = DenseMatrix::from_column_slice(2, 1, &[0.7, 0.7]);
        let diag = noisy_thresholds(&d, 1e-4, 0.1, 40, 10, 1.0).unwrap();
        let v = serde_json::to_value(&diag).unwrap();
        assert!(v["epsilon_threshold"].is_null());
        assert_eq!(v["conditions_met"]["consistency"], false);
        assert!(v["d_bar"].is_f64());
    }

    #[test]
    fn brute_force_examples() {
        let (s, r) = brute_force_cssp(&toy(), 1).unwrap();
        assert_eq!(s, vec![2]);
        assert_relative_eq!(r, 1.0, epsilon = 1e-14);

        let sq = DenseMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0]);
        let (s, r) = brute_force_cssp(&sq, 3).unwrap();
        assert_eq!(s, vec![0, 1, 2]);
        assert!(r < 1e-24);
    }

    #[test]
    fn brute_force_guard() {
        let a = DenseMatrix::zeros(2, 60);
        assert!(matches!(
            brute_force_cssp(&a, 30),
            Err(Error::TooManySubsets { .. })
        ));
        assert!(brute_force_cssp(&a, 0).is_err());
        assert_eq!(binomial(12, 3), 220);
    }
}
