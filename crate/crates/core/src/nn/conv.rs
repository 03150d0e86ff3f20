//! 1D temporal convolution (cross-correlation) over multichannel input and
//! non-overlapping max pooling, with manual backprop.

use super::NnError;

/// One convolution branch: `filters` kernels of temporal width `width`
/// summing over all input channels, zero same-padding, stride 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvBranch {
    pub in_channels: usize,
    pub time: usize,
    pub filters: usize,
    pub width: usize,
}

impl ConvBranch {
    pub fn weights_len(&self) -> usize {
        self.filters * self.in_channels * self.width
    }

    /// Weights then biases.
    pub fn n_params(&self) -> usize {
        self.weights_len() + self.filters
    }

    /// Left zero-padding so the output has the input's time length.
    pub fn pad_left(&self) -> usize {
        (self.width - 1) / 2
    }
}

/// input: channels x time (row-major); output: filters x time.
pub fn conv1d(branch: ConvBranch, params: &[f64], input: &[f64]) -> Result<Vec<f64>, NnError> {
    let ConvBranch { in_channels, time, filters, width } = branch;
    if input.len() != in_channels * time {
        return Err(NnError::ShapeMismatch(format!(
            "conv1d: input len {} != {in_channels} x {time}",
            input.len()
        )));
    }
    if params.len() != branch.n_params() {
        return Err(NnError::ShapeMismatch(format!(
            "conv1d: {} params, expected {}",
            params.len(),
            branch.n_params()
        )));
    }
    let pad = branch.pad_left() as isize;
    let biases = &params[branch.weights_len()..];
    let mut out = vec![0.0; filters * time];
    for f in 0..filters {
        let w_f = &params[f * in_channels * width..(f + 1) * in_channels * width];
        for t in 0..time {
            let mut acc = biases[f];
            for c in 0..in_channels {
                let w_fc = &w_f[c * width..(c + 1) * width];
                let x_c = &input[c * time..(c + 1) * time];
                for (k, w) in w_fc.iter().enumerate() {
                    let src = t as isize - pad + k as isize;
                    if src >= 0 && (src as usize) < time {
                        acc += w * x_c[src as usize];
                    }
                }
            }
            out[f * time + t] = acc;
        }
    }
    Ok(out)
}

/// Backward: accumulates parameter gradients into `grads` and input
/// gradients into `dinput` (channels x time).
pub fn conv1d_backward(
    branch: ConvBranch,
    params: &[f64],
    input: &[f64],
    dout: &[f64],
    grads: &mut [f64],
    dinput: &mut [f64],
) {
    let ConvBranch { in_channels, time, filters, width } = branch;
    debug_assert_eq!(dout.len(), filters * time);
    debug_assert_eq!(grads.len(), branch.n_params());
    debug_assert_eq!(dinput.len(), in_channels * time);
    let pad = branch.pad_left() as isize;
    let wlen = branch.weights_len();
    for f in 0..filters {
        let dout_f = &dout[f * time..(f + 1) * time];
        let mut db = 0.0;
        for g in dout_f {
            db += g;
        }
        grads[wlen + f] += db;
        for c in 0..in_channels {
            let x_c = &input[c * time..(c + 1) * time];
            let w_fc = &params[f * in_channels * width + c * width..f * in_channels * width + (c + 1) * width];
            let dw_fc = &mut grads[f * in_channels * width + c * width
                ..f * in_channels * width + (c + 1) * width];
            let dx_c = &mut dinput[c * time..(c + 1) * time];
            for t in 0..time {
                let g = dout_f[t];
                if g == 0.0 {
                    continue;
                }
                for k in 0..width {
                    let src = t as isize - pad + k as isize;
                    if src >= 0 && (src as usize) < time {
                        dw_fc[k] += g * x_c[src as usize];
                        dx_c[src as usize] += g * w_fc[k];
                    }
                }
            }
        }
    }
}

/// Non-overlapping max pooling over time per row; a trailing partial block
/// is dropped. Returns the pooled values and the argmax index per block
/// (first maximal index on ties, which is also where the gradient routes).
pub fn maxpool1d(
    input: &[f64],
    rows: usize,
    time: usize,
    pool: usize,
) -> Result<(Vec<f64>, Vec<usize>), NnError> {
    if time < pool {
        return Err(NnError::PoolTooLarge { pool, len: time });
    }
    debug_assert_eq!(input.len(), rows * time);
    let out_t = time / pool;
    let mut out = vec![0.0; rows * out_t];
    let mut argmax = vec![0usize; rows * out_t];
    for r in 0..rows {
        let row = &input[r * time..(r + 1) * time];
        for j in 0..out_t {
            let mut best = j * pool;
            for k in j * pool + 1..(j + 1) * pool {
                if row[k] > row[best] {
                    best = k;
                }
            }
            out[r * out_t + j] = row[best];
            argmax[r * out_t + j] = best;
        }
    }
    Ok((out, argmax))
}

/// Routes each pooled gradient to its block's argmax position.
pub fn maxpool1d_backward(
    dout: &[f64],
    argmax: &[usize],
    rows: usize,
    time: usize,
    pool: usize,
    dinput: &mut [f64],
) {
    let out_t = time / pool;
    debug_assert_eq!(dout.len(), rows * out_t);
    debug_assert_eq!(dinput.len(), rows * time);
    for r in 0..rows {
        for j in 0..out_t {
            dinput[r * time + argmax[r * out_t + j]] += dout[r * out_t + j];
        }
    }
}
