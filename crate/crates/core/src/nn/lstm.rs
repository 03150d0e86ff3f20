//! LSTM cell and stacked-layer sequence evaluation with manual backprop.
//!
//! Gate order inside a layer's flat parameter block: W_f, W_i, W_c, W_o
//! (each hidden x (hidden + input)), then b_f, b_i, b_c, b_o. The gate input
//! is the concatenation [h_prev, x].

use super::{dot, matvec_t_add, outer_add, sigmoid, NnError};

/// Shape descriptor for one LSTM layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmLayerDims {
    pub input: usize,
    pub hidden: usize,
}

pub const GATE_F: usize = 0;
pub const GATE_I: usize = 1;
pub const GATE_C: usize = 2;
pub const GATE_O: usize = 3;

impl LstmLayerDims {
    pub fn concat_width(&self) -> usize {
        self.hidden + self.input
    }

    pub fn weights_len(&self) -> usize {
        self.hidden * self.concat_width()
    }

    pub fn n_params(&self) -> usize {
        4 * (self.weights_len() + self.hidden)
    }

    pub fn w<'a>(&self, params: &'a [f64], gate: usize) -> &'a [f64] {
        let len = self.weights_len();
        &params[gate * len..(gate + 1) * len]
    }

    pub fn b<'a>(&self, params: &'a [f64], gate: usize) -> &'a [f64] {
        let base = 4 * self.weights_len();
        &params[base + gate * self.hidden..base + (gate + 1) * self.hidden]
    }

    fn w_mut<'a>(&self, params: &'a mut [f64], gate: usize) -> &'a mut [f64] {
        let len = self.weights_len();
        &mut params[gate * len..(gate + 1) * len]
    }

    fn b_mut<'a>(&self, params: &'a mut [f64], gate: usize) -> &'a mut [f64] {
        let base = 4 * self.weights_len();
        &mut params[base + gate * self.hidden..base + (gate + 1) * self.hidden]
    }
}

/// Recurrent state (h, c) of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl HiddenState {
    pub fn zeros(hidden: usize) -> Self {
        HiddenState { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

/// Intermediates cached by the forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct CellCache {
    /// [h_prev, x]
    pub concat: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub c_tilde: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// One cell step:
///   f = sigma(W_f [h_prev, x] + b_f)        i = sigma(W_i [h_prev, x] + b_i)
///   c~ = tanh(W_c [h_prev, x] + b_c)        o = sigma(W_o [h_prev, x] + b_o)
///   c = f * c_prev + i * c~                 h = o * tanh(c)
pub fn lstm_cell(
    dims: LstmLayerDims,
    params: &[f64],
    x: &[f64],
    prev: &HiddenState,
) -> Result<(HiddenState, CellCache), NnError> {
    if x.len() != dims.input || prev.h.len() != dims.hidden || prev.c.len() != dims.hidden {
        return Err(NnError::ShapeMismatch(format!(
            "lstm_cell: x={} h={} c={} vs dims input={} hidden={}",
            x.len(),
            prev.h.len(),
            prev.c.len(),
            dims.input,
            dims.hidden
        )));
    }
    if params.len() != dims.n_params() {
        return Err(NnError::ShapeMismatch(format!(
            "lstm_cell: {} params, expected {}",
            params.len(),
            dims.n_params()
        )));
    }
    let h = dims.hidden;
    let cw = dims.concat_width();
    let mut concat = Vec::with_capacity(cw);
    concat.extend_from_slice(&prev.h);
    concat.extend_from_slice(x);

    let gate = |g: usize, act: fn(f64) -> f64| -> Vec<f64> {
        let w = dims.w(params, g);
        let b = dims.b(params, g);
        (0..h).map(|r| act(dot(&w[r * cw..(r + 1) * cw], &concat) + b[r])).collect()
    };
    let f = gate(GATE_F, sigmoid);
    let i = gate(GATE_I, sigmoid);
    let c_tilde = gate(GATE_C, f64::tanh);
    let o = gate(GATE_O, sigmoid);

    let mut c = vec![0.0; h];
    let mut tanh_c = vec![0.0; h];
    let mut h_out = vec![0.0; h];
    for j in 0..h {
        c[j] = f[j] * prev.c[j] + i[j] * c_tilde[j];
        tanh_c[j] = c[j].tanh();
        h_out[j] = o[j] * tanh_c[j];
    }
    let cache = CellCache { concat, f, i, c_tilde, o, c_prev: prev.c.clone(), c, tanh_c };
    Ok((HiddenState { h: h_out, c: cache.c.clone() }, cache))
}

/// Backward through one cell. `dh`/`dc` are the gradients flowing into h_t
/// and c_t; returns (dx, dh_prev, dc_prev) and accumulates parameter
/// gradients into `grads` (same layout as `params`).
pub fn lstm_cell_backward(
    dims: LstmLayerDims,
    params: &[f64],
    cache: &CellCache,
    dh: &[f64],
    dc_in: &[f64],
    grads: &mut [f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = dims.hidden;
    let cw = dims.concat_width();
    debug_assert_eq!(grads.len(), dims.n_params());

    let mut dz = vec![0.0; 4 * h]; // pre-activation grads per gate
    let mut dc_prev = vec![0.0; h];
    for j in 0..h {
        let do_j = dh[j] * cache.tanh_c[j];
        let dc = dc_in[j] + dh[j] * cache.o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
        let df = dc * cache.c_prev[j];
        let di = dc * cache.c_tilde[j];
        let dct = dc * cache.i[j];
        dz[GATE_F * h + j] = df * cache.f[j] * (1.0 - cache.f[j]);
        dz[GATE_I * h + j] = di * cache.i[j] * (1.0 - cache.i[j]);
        dz[GATE_C * h + j] = dct * (1.0 - cache.c_tilde[j] * cache.c_tilde[j]);
        dz[GATE_O * h + j] = do_j * cache.o[j] * (1.0 - cache.o[j]);
        dc_prev[j] = dc * cache.f[j];
    }

    let mut dconcat = vec![0.0; cw];
    for g in 0..4 {
        let dz_g = &dz[g * h..(g + 1) * h];
        outer_add(dims.w_mut(grads, g), dz_g, &cache.concat);
        for (j, v) in dims.b_mut(grads, g).iter_mut().enumerate() {
            *v += dz_g[j];
        }
        matvec_t_add(dims.w(params, g), h, cw, dz_g, &mut dconcat);
    }
    let dh_prev = dconcat[..h].to_vec();
    let dx = dconcat[h..].to_vec();
    (dx, dh_prev, dc_prev)
}

/// Caches for a whole stacked-sequence forward pass.
#[derive(Debug, Clone)]
pub struct StackCache {
    /// `caches[layer][t]`
    pub caches: Vec<Vec<CellCache>>,
    /// Inter-layer inputs after dropout: `fed[layer][t]` is what layer
    /// `layer` consumed at step t (layer 0 consumes the raw sequence).
    pub fed: Vec<Vec<Vec<f64>>>,
}

/// Run a stack of LSTM layers over a sequence (time-major `seq`: T x input),
/// states zero-initialized at t = 0. `masks`, when given, are inter-layer
/// dropout masks: `masks[l][t]` scales layer l's output before it feeds layer
/// l+1 (so `masks.len() == layers.len() - 1`). Returns the top layer's final
/// hidden state.
pub fn lstm_forward(
    layers: &[LstmLayerDims],
    params: &[&[f64]],
    seq: &[f64],
    seq_len: usize,
    masks: Option<&[Vec<Vec<f64>>]>,
) -> Result<(Vec<f64>, StackCache), NnError> {
    if seq_len == 0 {
        return Err(NnError::EmptySequence);
    }
    if layers.is_empty() || layers.len() != params.len() {
        return Err(NnError::ShapeMismatch("lstm_forward: layers/params mismatch".into()));
    }
    if seq.len() != seq_len * layers[0].input {
        return Err(NnError::ShapeMismatch(format!(
            "lstm_forward: sequence len {} != {} x {}",
            seq.len(),
            seq_len,
            layers[0].input
        )));
    }
    if let Some(m) = masks {
        if m.len() != layers.len() - 1 {
            return Err(NnError::ShapeMismatch("lstm_forward: need one mask set per stacked layer".into()));
        }
    }

    let n_layers = layers.len();
    let mut caches: Vec<Vec<CellCache>> = vec![Vec::with_capacity(seq_len); n_layers];
    let mut fed: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(seq_len); n_layers];
    let mut states: Vec<HiddenState> =
        layers.iter().map(|d| HiddenState::zeros(d.hidden)).collect();

    for t in 0..seq_len {
        let mut x: Vec<f64> = seq[t * layers[0].input..(t + 1) * layers[0].input].to_vec();
        for (l, dims) in layers.iter().enumerate() {
            fed[l].push(x.clone());
            let (next, cache) = lstm_cell(*dims, params[l], &x, &states[l])?;
            caches[l].push(cache);
            x = next.h.clone();
            states[l] = next;
            if l + 1 < n_layers {
                if let Some(m) = masks {
                    for (j, v) in x.iter_mut().enumerate() {
                        *v *= m[l][t][j];
                    }
                }
            }
        }
    }
    Ok((states[n_layers - 1].h.clone(), StackCache { caches, fed }))
}

/// Backward through the whole stack given the gradient at the top layer's
/// final hidden state. Accumulates parameter gradients per layer and returns
/// the gradient with respect to the input sequence (T x input).
pub fn lstm_backward(
    layers: &[LstmLayerDims],
    params: &[&[f64]],
    cache: &StackCache,
    seq_len: usize,
    d_top_h: &[f64],
    masks: Option<&[Vec<Vec<f64>>]>,
    grads: &mut [&mut [f64]],
) -> Vec<f64> {
    let n_layers = layers.len();
    // d_out[t] = gradient wrt layer l's post-dropout output at step t.
    let mut d_out: Vec<Vec<f64>> = vec![vec![0.0; layers[n_layers - 1].hidden]; seq_len];
    d_out[seq_len - 1].copy_from_slice(d_top_h);

    let mut d_input: Vec<Vec<f64>> = Vec::new();
    for l in (0..n_layers).rev() {
        let dims = layers[l];
        let mut dh = vec![0.0; dims.hidden];
        let mut dc = vec![0.0; dims.hidden];
        let mut dx_t: Vec<Vec<f64>> = vec![Vec::new(); seq_len];
        for t in (0..seq_len).rev() {
            // gradient arriving at this layer's output h_t
            let mut dh_total = d_out[t].clone();
            if l + 1 < n_layers {
                if let Some(m) = masks {
                    for (j, v) in dh_total.iter_mut().enumerate() {
                        *v *= m[l][t][j];
                    }
                }
            }
            for (j, v) in dh.iter_mut().enumerate() {
                *v += dh_total[j];
            }
            let (dx, dh_prev, dc_prev) =
                lstm_cell_backward(dims, params[l], &cache.caches[l][t], &dh, &dc, grads[l]);
            dx_t[t] = dx;
            dh = dh_prev;
            dc = dc_prev;
        }
        d_out = dx_t;
        if l == 0 {
            d_input = d_out.clone();
        }
    }
    let mut flat = Vec::with_capacity(seq_len * layers[0].input);
    for t in d_input {
        flat.extend(t);
    }
    flat
}
