//! Planted column-subset instances: a well-conditioned basis of unit columns
//! plus non-basis columns that are sparse-mass combinations of it.

use nalgebra::SymmetricEigen;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Minimum smallest eigenvalue of the basis Gram matrix accepted by the generator.
pub const MIN_BASIS_EIGENVALUE: f64 = 0.1;
const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Row dimension.
    pub d: usize,
    pub basis_size: usize,
    /// Total column count.
    pub n: usize,
    /// Upper bound on the ℓ₁ mass of every expansion-coefficient column, in (0, 1).
    pub coeff_bound: f64,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryInstance {
    pub matrix: DenseMatrix,
    /// Planted basis indices, ascending.
    pub basis: Vec<usize>,
    /// `basis_size × (n − basis_size)` expansion coefficients of the
    /// non-basis columns, in ascending column order.
    pub coefficients: DenseMatrix,
}

impl RecoveryInstance {
    /// Non-basis column indices, ascending.
    pub fn non_basis(&self) -> Vec<usize> {
        (0..self.matrix.ncols())
            .filter(|j| !self.basis.contains(j))
            .collect()
    }

    /// The full `n × n` coefficient matrix: identity columns for the basis,
    /// planted coefficients elsewhere, zero rows outside the basis.
    pub fn full_coefficients(&self) -> DenseMatrix {
        let n = self.matrix.ncols();
        let mut full = DenseMatrix::zeros(n, n);
        for &i in &self.basis {
            full[(i, i)] = 1.0;
        }
        for (k, &j) in self.non_basis().iter().enumerate() {
            for (r, &i) in self.basis.iter().enumerate() {
                full[(i, j)] = self.coefficients[(r, k)];
            }
        }
        full
    }
}

/// Draws a planted instance. Basis columns are random unit vectors,
/// resampled until their Gram matrix has smallest eigenvalue at least
/// [`MIN_BASIS_EIGENVALUE`]. Each non-basis column has coefficient ℓ₁ mass
/// uniform in `[coeff_bound / 2, coeff_bound]`. Gaussian noise is added to the
/// non-basis columns only, and those columns are not renormalized.
pub fn synthetic_recovery_instance(spec: &SyntheticSpec, seed: u64) -> Result<RecoveryInstance> {
    let SyntheticSpec {
        d,
        basis_size,
        n,
        coeff_bound,
        noise_sigma,
    } = *spec;
    if basis_size == 0 || basis_size > d || basis_size > n {
        return Err(Error::InvalidArgument(format!(
            "basis size must lie in 1..=min(d, n), got {basis_size}"
        )));
    }
    if !(coeff_bound > 0.0 && coeff_bound < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "coefficient bound must lie in (0, 1), got {coeff_bound}"
        )));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise level must be non-negative, got {noise_sigma}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis_cols = draw_basis(&mut rng, d, basis_size)?;

    let mut basis = index::sample(&mut rng, n, basis_size).into_vec();
    basis.sort_unstable();
    let others: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();

    let mut coefficients = DenseMatrix::zeros(basis_size, others.len());
    for mut col in coefficients.column_iter_mut() {
        let g: Vec<f64> = (0..basis_size)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let l1: f64 = g.iter().map(|v: &f64| v.abs()).sum();
        let mass = coeff_bound * rng.random_range(0.5..=1.0);
        for (c, v) in col.iter_mut().zip(&g) {
            *c = v / l1 * mass;
        }
    }

    let mut matrix = DenseMatrix::zeros(d, n);
    for (r, &i) in basis.iter().enumerate() {
        matrix.set_column(i, &basis_cols.column(r));
    }
    for (k, &j) in others.iter().enumerate() {
        let mut col = &basis_cols * coefficients.column(k);
        if noise_sigma > 0.0 {
            for v in col.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += noise_sigma * z;
            }
        }
        matrix.set_column(j, &col);
    }

    Ok(RecoveryInstance {
        matrix,
        basis,
        coefficients,
    })
}

fn draw_basis(rng: &mut ChaCha8Rng, d: usize, size: usize) -> Result<DenseMatrix> {
    for _ in 0..MAX_ATTEMPTS {
        let mut b = DenseMatrix::from_fn(d, size, |_, _| StandardNormal.sample(&mut *rng));
        for mut col in b.column_iter_mut() {
            let norm = col.norm();
            col /= norm;
        }
        let eig = SymmetricEigen::new(b.tr_mul(&b));
        if eig.eigenvalues.min() >= MIN_BASIS_EIGENVALUE {
            return Ok(b);
        }
    }
    Err(Error::InvalidArgument(format!(
        "could not draw a basis with smallest Gram eigenvalue ≥ {MIN_BASIS_EIGENVALUE} in {MAX_ATTEMPTS} attempts"
    )))
}
