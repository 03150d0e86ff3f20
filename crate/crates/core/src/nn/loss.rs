//! Weighted categorical cross-entropy.

/// -(1/N) sum_i w_{class(i)} log p_{i, class(i)}.
///
/// With all weights 1 this is plain categorical cross-entropy. Predicted
/// probabilities are clamped at 1e-12 inside the log to guard softmax
/// underflow; gradients treat the clamp as identity.
pub fn weighted_cross_entropy(
    probs: &[f64],
    n_classes: usize,
    targets: &[u8],
    class_weights: &[f64],
) -> f64 {
    debug_assert_eq!(probs.len(), targets.len() * n_classes);
    debug_assert_eq!(class_weights.len(), n_classes);
    let n = targets.len();
    let mut total = 0.0;
    for (i, &t) in targets.iter().enumerate() {
        let p = probs[i * n_classes + t as usize].max(1e-12);
        total -= class_weights[t as usize] * p.ln();
    }
    total / n as f64
}

/// Gradient of the weighted cross-entropy with respect to the logits of one
/// example, using the softmax shortcut: scale * w * (p - onehot(target)).
pub fn softmax_ce_logit_grad(probs: &[f64], target: u8, weight: f64, scale: f64, dlogits: &mut [f64]) {
    debug_assert_eq!(probs.len(), dlogits.len());
    for (j, (p, d)) in probs.iter().zip(dlogits.iter_mut()).enumerate() {
        let y = if j == target as usize { 1.0 } else { 0.0 };
        *d = scale * weight * (p - y);
    }
}
