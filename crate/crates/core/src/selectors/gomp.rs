use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, GramMatrix};

use super::{
    argmax_excluding, Method, SelectionResult, SelectorConfig, Termination, GOMP_RANK_RELATIVE_TOL,
};

/// Group orthogonal matching pursuit over the Gram matrix `Q`.
///
/// Each column of the ensemble is one group. Starting from `B = 0` and an
/// empty active set, every step forms the residual correlation `R = Q − QB`,
/// scores each inactive candidate `i` by `‖R[:, i]‖₂`, activates the winner
/// and refits `B_A = Q_{A,A}† Q_{A,:}`. The loop ends when `‖Bᵀ‖₂,₁ ≥ 1/λ`
/// (if `λ` is set), when the target size is reached, or when the winning
/// correlation drops to `ε`.
///
/// Only the Gram matrix is consulted, so any inner product works.
pub fn select_gomp(gram: &GramMatrix, config: &SelectorConfig) -> Result<SelectionResult> {
    if config.method != Method::Gomp {
        return Err(Error::InvalidArgument(format!(
            "select_gomp called with method {}",
            config.method
        )));
    }
    let q = gram.as_matrix();
    let n = gram.dim();
    config.validate(n)?;
    let m = config.target_size;

    let mut active: Vec<usize> = Vec::with_capacity(m);
    let mut in_active = vec![false; n];
    let mut scores = Vec::with_capacity(m);
    // Rows of B for the active set, in activation order.
    let mut b_active = DenseMatrix::zeros(0, n);
    let mut rank_floor = None;

    let termination = loop {
        if let Some(lambda) = config.gomp_lambda {
            let group_norm: f64 = b_active.row_iter().map(|r| r.norm()).sum();
            if group_norm >= 1.0 / lambda {
                break Termination::LambdaStop;
            }
        }
        if active.len() >= m {
            break Termination::ReachedTarget;
        }

        let residual = if active.is_empty() {
            q.clone()
        } else {
            q - q.select_columns(&active) * &b_active
        };
        let correlations: Vec<f64> = residual.column_iter().map(|c| c.norm()).collect();
        let floor = *rank_floor.get_or_insert_with(|| {
            GOMP_RANK_RELATIVE_TOL * correlations.iter().cloned().fold(0.0, f64::max)
        });

        let Some((best, score)) = argmax_excluding(&correlations, &in_active) else {
            break Termination::ExhaustedRank;
        };
        if score <= floor {
            break Termination::ExhaustedRank;
        }
        if score <= config.gomp_epsilon {
            break Termination::EpsilonStop;
        }

        active.push(best);
        in_active[best] = true;
        scores.push(score);

        let q_aa = q.select_rows(&active).select_columns(&active);
        let q_a = q.select_rows(&active);
        b_active = linalg::pseudoinverse(&q_aa)? * q_a;
    };

    Ok(SelectionResult {
        ordered_indices: active,
        step_scores: scores,
        coefficients: Some(b_active),
        termination,
    })
}
