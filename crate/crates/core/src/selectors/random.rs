use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{SelectionResult, Termination};

/// Uniform sample of `m` distinct indices from `0..n`, driven by a seeded
/// ChaCha8 stream so the output is identical on every platform.
///
/// There is no criterion, so every step score is zero.
pub fn select_random(n: usize, m: usize, seed: u64) -> Result<SelectionResult> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "target size must lie in 1..={n}, got {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = index::sample(&mut rng, n, m).into_vec();
    Ok(SelectionResult {
        step_scores: vec![0.0; indices.len()],
        ordered_indices: indices,
        coefficients: None,
        termination: Termination::ReachedTarget,
    })
}
