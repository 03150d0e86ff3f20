//! Central-difference gradient verification.

use super::ParamLayout;

/// Outcome of a finite-difference sweep over every parameter.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub n_checked: usize,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "max rel err {:.3e} at {}[{}] over {} params",
            self.max_rel_err, self.worst_param, self.worst_index, self.n_checked
        )
    }
}

/// Compare analytic gradients against central finite differences
/// (f(x+h) - f(x-h)) / 2h with h = 1e-5 scaled by parameter magnitude.
///
/// The per-parameter relative error is |a - fd| / max(|a|, |fd|, 1e-4); the
/// 1e-4 floor turns the check into an absolute bound for near-zero
/// gradients, where finite differences carry irreducible rounding noise.
pub fn grad_check(
    mut loss: impl FnMut(&[f64]) -> f64,
    params: &mut [f64],
    analytic: &[f64],
    layout: &ParamLayout,
) -> GradCheckReport {
    assert_eq!(params.len(), analytic.len());
    let mut max_rel_err = 0.0f64;
    let mut worst_index = 0usize;
    for i in 0..params.len() {
        let h = 1e-5 * params[i].abs().max(1.0);
        let orig = params[i];
        params[i] = orig + h;
        let up = loss(params);
        params[i] = orig - h;
        let down = loss(params);
        params[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let a = analytic[i];
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-4);
        if rel > max_rel_err {
            max_rel_err = rel;
            worst_index = i;
        }
    }
    GradCheckReport {
        max_rel_err,
        worst_param: layout.name_at(worst_index).to_string(),
        worst_index,
        n_checked: params.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catches_a_wrong_gradient() {
        // f(x, y) = x^2 + 3y, analytic grads [2x, 3].
        let mut layout = ParamLayout::default();
        layout.push("p", &[2], false);
        let mut params = vec![0.7, -0.2];
        let good = vec![1.4, 3.0];
        let report = grad_check(|p| p[0] * p[0] + 3.0 * p[1], &mut params, &good, &layout);
        assert!(report.max_rel_err < 1e-9, "{report}");

        let bad = vec![1.4, 2.9];
        let report = grad_check(|p| p[0] * p[0] + 3.0 * p[1], &mut params, &bad, &layout);
        assert!(report.max_rel_err > 1e-2, "{report}");
    }

    #[test]
    fn restores_parameters() {
        let mut layout = ParamLayout::default();
        layout.push("p", &[1], false);
        let mut params = vec![0.25];
        let _ = grad_check(|p| p[0], &mut params, &[1.0], &layout);
        assert_eq!(params, vec![0.25]);
    }
}
