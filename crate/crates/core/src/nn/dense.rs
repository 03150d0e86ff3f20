//! Dense layer, rectifier and numerically stable softmax.

use super::{dot, matvec_t_add, outer_add};

/// y = W x + b for row-major W (rows x cols).
pub fn dense(w: &[f64], b: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(b.len(), rows);
    debug_assert_eq!(x.len(), cols);
    (0..rows).map(|r| dot(&w[r * cols..(r + 1) * cols], x) + b[r]).collect()
}

/// Backward for `dense`; accumulates dW and db and adds W^T dy into dx.
pub fn dense_backward(
    w: &[f64],
    rows: usize,
    cols: usize,
    x: &[f64],
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    dx: &mut [f64],
) {
    outer_add(dw, dy, x);
    for (r, g) in dy.iter().enumerate() {
        db[r] += g;
    }
    matvec_t_add(w, rows, cols, dy, dx);
}

pub fn relu(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// dx = dy where the pre-activation was positive; `pre` is the layer input
/// before rectification.
pub fn relu_backward(pre: &[f64], dy: &[f64], dx: &mut [f64]) {
    for ((p, g), o) in pre.iter().zip(dy).zip(dx.iter_mut()) {
        *o = if *p > 0.0 { *g } else { 0.0 };
    }
}

/// Probabilities via max-subtracted softmax; the output sums to 1 and stays
/// finite for extreme logits.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
