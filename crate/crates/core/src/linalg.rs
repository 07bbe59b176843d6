//! Dense linear algebra shared by the selectors, the surrogate and the verifiers.
//!
//! Everything here goes through a single SVD backbone so that pseudoinverses,
//! projections, leverage scores and the rank-k floor agree numerically.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Column-major dense matrix of `f64`. One column per snapshot.
pub type DenseMatrix = DMatrix<f64>;

/// Relative symmetry tolerance accepted by [`GramMatrix::new`].
pub const GRAM_SYMMETRY_TOL: f64 = 1e-12;
/// Negative eigenvalues down to this fraction of the largest one still count as PSD.
pub const GRAM_PSD_TOL: f64 = 1e-10;

/// Rejects matrices with NaN or infinite entries, naming the first offending column.
pub fn check_finite(a: &DenseMatrix) -> Result<()> {
    for (j, col) in a.column_iter().enumerate() {
        if let Some(row) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { column: j, row });
        }
    }
    Ok(())
}

fn check_nonempty(a: &DenseMatrix) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidArgument(format!(
            "matrix must be nonempty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Symmetric positive semi-definite matrix of pairwise inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DenseMatrix);

impl GramMatrix {
    /// Validates symmetry, non-negative diagonal and numerical positive semi-definiteness.
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        check_nonempty(&matrix)?;
        check_finite(&matrix)?;
        if !matrix.is_square() {
            return Err(Error::NotGram(format!(
                "expected a square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let n = matrix.nrows();
        for i in 0..n {
            if matrix[(i, i)] < 0.0 {
                return Err(Error::NotGram(format!("negative diagonal entry at {i}")));
            }
            for j in (i + 1)..n {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > GRAM_SYMMETRY_TOL * scale {
                    return Err(Error::NotGram(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        let eig = SymmetricEigen::new(matrix.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if min < -GRAM_PSD_TOL * max.max(0.0) {
            return Err(Error::NotGram(format!(
                "eigenvalue {min:e} below tolerance (largest {max:e})"
            )));
        }
        Ok(GramMatrix(matrix))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.0
    }
}

/// Euclidean Gram matrix `AᵀA` of the ensemble columns.
pub fn gram(ensemble: &DenseMatrix) -> Result<GramMatrix> {
    check_nonempty(ensemble)?;
    check_finite(ensemble)?;
    let q = ensemble.tr_mul(ensemble);
    Ok(GramMatrix(symmetrize(q)))
}

/// Gram matrix under the diagonal inner product `⟨x, y⟩ = Σ w_k x_k y_k`.
pub fn gram_weighted(ensemble: &DenseMatrix, weights: &[f64]) -> Result<GramMatrix> {
    check_nonempty(ensemble)?;
    check_finite(ensemble)?;
    if weights.len() != ensemble.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} rows",
            weights.len(),
            ensemble.nrows()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "inner-product weights must be finite and non-negative, got {w}"
        )));
    }
    let mut weighted = ensemble.clone();
    for (mut row, w) in weighted.row_iter_mut().zip(weights) {
        row *= *w;
    }
    let q = ensemble.tr_mul(&weighted);
    Ok(GramMatrix(symmetrize(q)))
}

// Copies the upper triangle onto the lower one so symmetry is exact.
fn symmetrize(mut q: DenseMatrix) -> DenseMatrix {
    let n = q.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            q[(i, j)] = q[(j, i)];
        }
    }
    q
}

/// Thin SVD with singular values sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// Left singular vectors as columns, `rows × r`.
    pub u: DenseMatrix,
    pub singular_values: DVector<f64>,
    /// Right singular vectors as columns, `cols × r`.
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn compute(a: &DenseMatrix) -> Result<Self> {
        check_nonempty(a)?;
        check_finite(a)?;
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let s = svd.singular_values;

        let mut order: Vec<usize> = (0..s.len()).collect();
        // Stable sort keeps the backend's order for exact ties.
        order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));

        let r = order.len();
        let mut su = DenseMatrix::zeros(u.nrows(), r);
        let mut sv = DenseMatrix::zeros(v_t.ncols(), r);
        let mut ss = DVector::zeros(r);
        for (dst, &src) in order.iter().enumerate() {
            su.set_column(dst, &u.column(src));
            sv.set_column(dst, &v_t.row(src).transpose());
            ss[dst] = s[src];
        }
        Ok(SvdFactors {
            u: su,
            singular_values: ss,
            v: sv,
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.get(0).copied().unwrap_or(0.0)
    }

    /// Pseudoinverse truncation threshold `max(rows, cols) · ε · σ_max`.
    pub fn rank_tolerance(&self) -> f64 {
        let dim = self.u.nrows().max(self.v.nrows()) as f64;
        dim * f64::EPSILON * self.sigma_max()
    }

    /// Number of singular values above [`Self::rank_tolerance`].
    pub fn numerical_rank(&self) -> usize {
        let tol = self.rank_tolerance();
        self.singular_values
            .iter()
            .take_while(|s| **s > tol)
            .count()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (mut col, s) in us.column_iter_mut().zip(self.singular_values.iter()) {
            col *= *s;
        }
        us * self.v.transpose()
    }

    pub fn pseudoinverse(&self) -> DenseMatrix {
        let r = self.numerical_rank();
        let mut v = self.v.columns(0, r).into_owned();
        for (mut col, s) in v.column_iter_mut().zip(self.singular_values.iter()) {
            col /= *s;
        }
        v * self.u.columns(0, r).transpose()
    }

    /// Orthonormal basis of the numerical range.
    pub fn range_basis(&self) -> DenseMatrix {
        self.u.columns(0, self.numerical_rank()).into_owned()
    }
}

/// Moore–Penrose pseudoinverse through the truncated SVD.
pub fn pseudoinverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(SvdFactors::compute(a)?.pseudoinverse())
}

/// Minimum-norm least-squares coefficients `X = basis† · targets`.
pub fn least_squares(basis: &DenseMatrix, targets: &DenseMatrix) -> Result<DenseMatrix> {
    check_finite(targets)?;
    if basis.nrows() != targets.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows but targets have {}",
            basis.nrows(),
            targets.nrows()
        )));
    }
    Ok(pseudoinverse(basis)? * targets)
}

/// Validates a subset of column indices: distinct and in range.
pub fn check_subset(subset: &[usize], ncols: usize) -> Result<()> {
    let mut seen = vec![false; ncols];
    for &i in subset {
        if i >= ncols {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: ncols,
            });
        }
        if seen[i] {
            return Err(Error::DuplicateIndex(i));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Copies the listed columns, in order, into a new matrix.
pub fn select_columns(a: &DenseMatrix, subset: &[usize]) -> DenseMatrix {
    a.select_columns(subset)
}

/// `A − P_S A`, where `P_S` is the orthogonal projector onto the span of the subset columns.
pub fn projection_residual_matrix(a: &DenseMatrix, subset: &[usize]) -> Result<DenseMatrix> {
    check_nonempty(a)?;
    check_finite(a)?;
    check_subset(subset, a.ncols())?;
    if subset.is_empty() {
        return Ok(a.clone());
    }
    let basis = SvdFactors::compute(&select_columns(a, subset))?.range_basis();
    let coeffs = basis.tr_mul(a);
    Ok(a - basis * coeffs)
}

/// Column-subset objective `‖A − A_S (A_S)† A‖²_F`.
pub fn projection_residual(a: &DenseMatrix, subset: &[usize]) -> Result<f64> {
    Ok(projection_residual_matrix(a, subset)?.norm_squared())
}

/// Eckart–Young floor `‖A − A_k‖²_F`, the sum of squared singular values past the k-th.
pub fn rank_k_error(a: &DenseMatrix, k: usize) -> Result<f64> {
    let limit = a.nrows().min(a.ncols());
    if k == 0 || k > limit {
        return Err(Error::InvalidArgument(format!(
            "rank k must lie in 1..={limit}, got {k}"
        )));
    }
    let svd = SvdFactors::compute(a)?;
    Ok(svd.singular_values.iter().skip(k).map(|s| s * s).sum())
}

/// Sum of column 2-norms. Applied to `Bᵀ` this is the group penalty on the rows of `B`.
pub fn mixed_norm_21(matrix: &DenseMatrix) -> f64 {
    matrix.column_iter().map(|c| c.norm()).sum()
}

/// Scales every nonzero column to unit 2-norm.
pub fn normalize_columns(a: &DenseMatrix) -> DenseMatrix {
    let mut out = a.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    out
}
