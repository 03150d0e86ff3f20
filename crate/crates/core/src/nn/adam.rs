//! Adam optimizer with bias correction and optional L2 regularization.

/// Optimizer hyperparameters. `lambda` is the L2 coefficient; the penalty
/// gradient `lambda * theta` is added before the moment updates, for
/// decay-flagged parameters only (weights, not biases).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lambda: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, lambda: 0.0 }
    }
}

/// First/second moment accumulators shaped like the flat parameter buffer.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub hyper: AdamHyper,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(n_params: usize, hyper: AdamHyper) -> Self {
        AdamState { hyper, m: vec![0.0; n_params], v: vec![0.0; n_params], step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over the whole parameter buffer.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], decay: &[bool]) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grads.len(), self.m.len());
        debug_assert_eq!(decay.len(), self.m.len());
        self.step += 1;
        let h = self.hyper;
        let bc1 = 1.0 - h.beta1.powi(self.step as i32);
        let bc2 = 1.0 - h.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let mut g = grads[i];
            if h.lambda > 0.0 && decay[i] {
                g += h.lambda * params[i];
            }
            self.m[i] = h.beta1 * self.m[i] + (1.0 - h.beta1) * g;
            self.v[i] = h.beta2 * self.v[i] + (1.0 - h.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // Bias correction makes the first update lr * g / |g| for eps = 0.
        let hyper = AdamHyper { lr: 1e-3, eps: 0.0, ..AdamHyper::default() };
        let mut state = AdamState::new(1, hyper);
        let mut params = vec![0.0];
        state.step(&mut params, &[2.0], &[false]);
        assert!((params[0] + 1e-3).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_without_decay_is_a_fixpoint() {
        let mut state = AdamState::new(3, AdamHyper::default());
        let mut params = vec![0.7, -0.3, 1.1];
        let before = params.clone();
        for _ in 0..5 {
            state.step(&mut params, &[0.0, 0.0, 0.0], &[true, true, true]);
        }
        assert_eq!(params, before); // lambda = 0, no decay applied
    }

    #[test]
    fn converges_on_quadratic() {
        // f(theta) = theta^2, gradient 2 theta, from theta = 1.
        let hyper = AdamHyper { lr: 0.05, ..AdamHyper::default() };
        let mut state = AdamState::new(1, hyper);
        let mut params = vec![1.0];
        for _ in 0..200 {
            let g = 2.0 * params[0];
            state.step(&mut params, &[g], &[false]);
        }
        assert!(params[0].abs() < 1e-2, "theta = {}", params[0]);
    }

    #[test]
    fn l2_decays_flagged_parameters_only() {
        let hyper = AdamHyper { lr: 1e-2, lambda: 0.1, ..AdamHyper::default() };
        let mut state = AdamState::new(2, hyper);
        let mut params = vec![1.0, 1.0];
        for _ in 0..50 {
            state.step(&mut params, &[0.0, 0.0], &[true, false]);
        }
        assert!(params[0] < 0.7, "decayed weight {}", params[0]);
        assert_eq!(params[1], 1.0);
    }
}
