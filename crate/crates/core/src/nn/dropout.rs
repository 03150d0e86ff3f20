//! Inverted-scaling dropout masks.

use super::NnError;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Bernoulli(keep) mask with kept units scaled by 1/keep so the expected
/// mask value is 1 per unit. Evaluation uses no mask (identity).
pub fn dropout_mask(len: usize, keep: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, NnError> {
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(NnError::BadKeepProbability(keep));
    }
    if keep == 1.0 {
        return Ok(vec![1.0; len]);
    }
    let scale = 1.0 / keep;
    Ok((0..len).map(|_| if rng.gen::<f64>() < keep { scale } else { 0.0 }).collect())
}
