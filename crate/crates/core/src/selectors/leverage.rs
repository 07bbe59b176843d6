use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SvdFactors};

use super::{argmax_excluding, SelectionResult, Termination};

/// Rank-k leverage score of every column: the squared norm of its row in the
/// top-k right singular vectors.
///
/// For singular values above the rank tolerance the row entry is formed as
/// `u_jᵀ a_i / σ_j`, so identical columns always get bitwise-identical scores.
pub fn leverage_scores(ensemble: &DenseMatrix, k: usize) -> Result<Vec<f64>> {
    let limit = ensemble.nrows().min(ensemble.ncols());
    if k == 0 || k > limit {
        return Err(Error::InvalidArgument(format!(
            "leverage rank must lie in 1..={limit}, got {k}"
        )));
    }
    let svd = SvdFactors::compute(ensemble)?;
    let tol = svd.rank_tolerance();
    let scores = (0..ensemble.ncols())
        .map(|i| {
            let col = ensemble.column(i);
            (0..k)
                .map(|j| {
                    let s = svd.singular_values[j];
                    let v = if s > tol {
                        svd.u.column(j).dot(&col) / s
                    } else {
                        svd.v[(i, j)]
                    };
                    v * v
                })
                .sum()
        })
        .collect();
    Ok(scores)
}

/// Deterministic leverage selection: the `m` columns with the largest rank-k
/// scores, in score order.
pub fn select_leverage(ensemble: &DenseMatrix, m: usize, k: usize) -> Result<SelectionResult> {
    let n = ensemble.ncols();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "target size must lie in 1..={n}, got {m}"
        )));
    }
    let scores = leverage_scores(ensemble, k)?;
    let mut taken = vec![false; n];
    let mut order = Vec::with_capacity(m);
    while order.len() < m {
        let (i, _) = argmax_excluding(&scores, &taken).expect("m <= n");
        taken[i] = true;
        order.push(i);
    }
    let step_scores = order.iter().map(|&i| scores[i]).collect();
    Ok(SelectionResult {
        ordered_indices: order,
        step_scores,
        coefficients: None,
        termination: Termination::ReachedTarget,
    })
}
