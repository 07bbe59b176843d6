use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, GramMatrix};

use super::{argmax_excluding, SelectionResult, Termination, PIVOT_RELATIVE_TOL};

fn check_size(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "target size must lie in 1..={n}, got {m}"
        )));
    }
    Ok(())
}

/// Outer-product pivoted Cholesky of `Q`. Each step takes the largest
/// remaining Schur-complement diagonal, i.e. the largest squared residual
/// norm after projecting out the columns already chosen.
pub fn select_pivoted_cholesky(gram: &GramMatrix, m: usize) -> Result<SelectionResult> {
    let q = gram.as_matrix();
    let n = gram.dim();
    check_size(m, n)?;

    let mut diag: Vec<f64> = q.diagonal().iter().copied().collect();
    let tol = PIVOT_RELATIVE_TOL * diag.iter().cloned().fold(0.0, f64::max);
    let mut factor = DenseMatrix::zeros(n, m);
    let mut chosen = vec![false; n];
    let mut indices = Vec::with_capacity(m);
    let mut scores = Vec::with_capacity(m);

    let mut termination = Termination::ReachedTarget;
    for k in 0..m {
        let Some((p, d)) = argmax_excluding(&diag, &chosen) else {
            termination = Termination::ExhaustedRank;
            break;
        };
        if d <= tol {
            termination = Termination::ExhaustedRank;
            break;
        }
        indices.push(p);
        scores.push(d);
        chosen[p] = true;

        let pivot = d.sqrt();
        let prev = factor.columns(0, k);
        let row_p = prev.row(p).transpose();
        let mut col: DVector<f64> = q.column(p) - prev * row_p;
        col /= pivot;
        for (i, l) in col.iter().enumerate() {
            diag[i] -= l * l;
        }
        diag[p] = 0.0;
        factor.set_column(k, &col);
    }

    Ok(SelectionResult {
        ordered_indices: indices,
        step_scores: scores,
        coefficients: None,
        termination,
    })
}

/// Column-pivoted QR by Gram–Schmidt with reorthogonalization. Each step
/// takes the column with the largest residual 2-norm.
pub fn select_pivoted_qr(ensemble: &DenseMatrix, m: usize) -> Result<SelectionResult> {
    linalg::check_finite(ensemble)?;
    let n = ensemble.ncols();
    check_size(m, n)?;

    let mut residual = ensemble.clone();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m);
    let mut chosen = vec![false; n];
    let mut indices = Vec::with_capacity(m);
    let mut scores = Vec::with_capacity(m);
    let mut tol = None;

    let mut termination = Termination::ReachedTarget;
    for _ in 0..m {
        let norms: Vec<f64> = residual.column_iter().map(|c| c.norm()).collect();
        let tol = *tol
            .get_or_insert_with(|| PIVOT_RELATIVE_TOL * norms.iter().cloned().fold(0.0, f64::max));
        let Some((p, norm)) = argmax_excluding(&norms, &chosen) else {
            termination = Termination::ExhaustedRank;
            break;
        };
        if norm <= tol {
            termination = Termination::ExhaustedRank;
            break;
        }
        indices.push(p);
        scores.push(norm);
        chosen[p] = true;

        let mut dir: DVector<f64> = residual.column(p).into_owned();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&dir);
                dir.axpy(-c, b, 1.0);
            }
        }
        let len = dir.norm();
        if len == 0.0 {
            termination = Termination::ExhaustedRank;
            break;
        }
        dir /= len;
        for _ in 0..2 {
            let coeffs = residual.tr_mul(&dir);
            residual.ger(-1.0, &dir, &coeffs, 1.0);
        }
        basis.push(dir);
    }

    Ok(SelectionResult {
        ordered_indices: indices,
        step_scores: scores,
        coefficients: None,
        termination,
    })
}

/// Greedy selection by the single largest-magnitude entry of the projection
/// residual `A − A_S (A_S)† A`; the residual is recomputed from scratch each step.
/// Ties go to the smallest column, then the smallest row.
pub fn select_pivoted_lu(ensemble: &DenseMatrix, m: usize) -> Result<SelectionResult> {
    linalg::check_finite(ensemble)?;
    let n = ensemble.ncols();
    check_size(m, n)?;

    let mut chosen = vec![false; n];
    let mut indices = Vec::with_capacity(m);
    let mut scores = Vec::with_capacity(m);
    let tol = PIVOT_RELATIVE_TOL * ensemble.amax();

    let mut termination = Termination::ReachedTarget;
    for _ in 0..m {
        let residual = linalg::projection_residual_matrix(ensemble, &indices)?;
        let col_max: Vec<f64> = residual.column_iter().map(|c| c.amax()).collect();
        let Some((p, magnitude)) = argmax_excluding(&col_max, &chosen) else {
            termination = Termination::ExhaustedRank;
            break;
        };
        if magnitude <= tol {
            termination = Termination::ExhaustedRank;
            break;
        }
        indices.push(p);
        scores.push(magnitude);
        chosen[p] = true;
    }

    Ok(SelectionResult {
        ordered_indices: indices,
        step_scores: scores,
        coefficients: None,
        termination,
    })
}
