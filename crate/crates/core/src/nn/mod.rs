//! Minimal neural-network numeric core with hand-derived gradients.
//!
//! Everything runs in 64-bit floating point on flat parameter buffers. Each
//! model declares a [`ParamLayout`] mapping named tensors to offsets in one
//! `Vec<f64>`; gradients, Adam state and checkpoints all share that layout.
//! Every forward op is pure given (inputs, params, masks); analytic gradients
//! are verified against central finite differences in `gradcheck`.

pub mod adam;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod gradcheck;
pub mod loss;
pub mod lstm;

pub use adam::{AdamHyper, AdamState};
pub use conv::{conv1d, conv1d_backward, maxpool1d, maxpool1d_backward, ConvBranch};
pub use dense::{dense, dense_backward, relu, relu_backward, softmax};
pub use dropout::dropout_mask;
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::{softmax_ce_logit_grad, weighted_cross_entropy};
pub use lstm::{lstm_cell, lstm_forward, HiddenState, LstmLayerDims};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty sequence")]
    EmptySequence,
    #[error("keep probability {0} outside (0, 1]")]
    BadKeepProbability(f64),
    #[error("pooling window {pool} exceeds input length {len}")]
    PoolTooLarge { pool: usize, len: usize },
    #[error("non-finite value produced in {0}")]
    NonFinite(String),
}

/// Dense tensor with up to three axes, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(shape.len() <= 3, "tensors have at most 3 axes");
        let numel = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; numel] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        assert!(shape.len() <= 3, "tensors have at most 3 axes");
        assert_eq!(shape.iter().product::<usize>(), data.len(), "shape/data mismatch");
        Tensor { shape: shape.to_vec(), data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// One named tensor inside a flat parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutEntry {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
    /// Whether L2 weight decay applies (weights yes, biases no).
    pub decay: bool,
}

impl LayoutEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Declaration-ordered map of named tensors into one flat buffer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamLayout {
    pub entries: Vec<LayoutEntry>,
    pub total: usize,
}

impl ParamLayout {
    pub fn push(&mut self, name: &str, shape: &[usize], decay: bool) -> std::ops::Range<usize> {
        let entry = LayoutEntry {
            name: name.to_string(),
            offset: self.total,
            shape: shape.to_vec(),
            decay,
        };
        let range = entry.range();
        self.total += entry.len();
        self.entries.push(entry);
        range
    }

    pub fn range_of(&self, name: &str) -> Option<std::ops::Range<usize>> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.range())
    }

    /// Per-index decay flags, used by the optimizer's L2 term.
    pub fn decay_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.total];
        for e in &self.entries {
            if e.decay {
                mask[e.range()].fill(true);
            }
        }
        mask
    }

    /// Name of the tensor containing flat index `idx` (for diagnostics).
    pub fn name_at(&self, idx: usize) -> &str {
        self.entries
            .iter()
            .find(|e| e.range().contains(&idx))
            .map(|e| e.name.as_str())
            .unwrap_or("?")
    }
}

// ---------------------------------------------------------------------------
// Slice math kernels
// ---------------------------------------------------------------------------

/// Dot product with four independent accumulators (fixed association order).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let j = i * 4;
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in chunks * 4..n {
        tail += a[j] * b[j];
    }
    ((s0 + s1) + (s2 + s3)) + tail
}

/// out = W x for row-major W (rows x cols).
#[inline]
pub fn matvec(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for (r, o) in out.iter_mut().enumerate() {
        *o = dot(&w[r * cols..(r + 1) * cols], x);
    }
}

/// dx += W^T dy.
#[inline]
pub fn matvec_t_add(w: &[f64], rows: usize, cols: usize, dy: &[f64], dx: &mut [f64]) {
    debug_assert_eq!(dy.len(), rows);
    debug_assert_eq!(dx.len(), cols);
    for (r, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        for (c, wv) in row.iter().enumerate() {
            dx[c] += g * wv;
        }
    }
}

/// dW += dy x^T.
#[inline]
pub fn outer_add(dw: &mut [f64], dy: &[f64], x: &[f64]) {
    debug_assert_eq!(dw.len(), dy.len() * x.len());
    let cols = x.len();
    for (r, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let row = &mut dw[r * cols..(r + 1) * cols];
        for (c, xv) in x.iter().enumerate() {
            row[c] += g * xv;
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..13).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..13).map(|i| (13 - i) as f64 * 0.25).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn layout_assigns_disjoint_ranges() {
        let mut layout = ParamLayout::default();
        let r1 = layout.push("w", &[3, 4], true);
        let r2 = layout.push("b", &[3], false);
        assert_eq!(r1, 0..12);
        assert_eq!(r2, 12..15);
        assert_eq!(layout.total, 15);
        assert_eq!(layout.range_of("b"), Some(12..15));
        let mask = layout.decay_mask();
        assert!(mask[..12].iter().all(|d| *d));
        assert!(mask[12..].iter().all(|d| !*d));
        assert_eq!(layout.name_at(13), "b");
    }

    #[test]
    fn tensor_shape_checks() {
        let t = Tensor::zeros(&[2, 3]);
        assert_eq!(t.numel(), 6);
        let t = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.shape(), &[2, 2]);
    }
}
