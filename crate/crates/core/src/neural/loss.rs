const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Mean and log standard deviation per output dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianHeadOutput {
    pub mu: Vec<f64>,
    pub log_sigma: Vec<f64>,
}

impl GaussianHeadOutput {
    pub fn sigma(&self) -> Vec<f64> {
        self.log_sigma.iter().map(|l| l.exp()).collect()
    }
}

/// Splits a `2d` network output into `(mu, log_sigma)` with `log_sigma`
/// clamped to `[log_sigma_min, log_sigma_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianHead {
    pub log_sigma_min: f64,
    pub log_sigma_max: f64,
}

impl Default for GaussianHead {
    fn default() -> Self {
        Self {
            log_sigma_min: -5.0,
            log_sigma_max: 2.0,
        }
    }
}

impl GaussianHead {
    pub fn split(&self, out: &[f64]) -> GaussianHeadOutput {
        let d = out.len() / 2;
        GaussianHeadOutput {
            mu: out[..d].to_vec(),
            log_sigma: out[d..]
                .iter()
                .map(|l| l.clamp(self.log_sigma_min, self.log_sigma_max))
                .collect(),
        }
    }

    /// NLL of `target` under the head applied to raw output `out`, with the
    /// gradient with respect to `out` written to `grad`. The clamp passes no
    /// gradient outside its range.
    pub fn nll_with_grad(&self, out: &[f64], target: &[f64], grad: &mut [f64]) -> f64 {
        let d = target.len();
        debug_assert_eq!(out.len(), 2 * d);
        let mut total = 0.0;
        for k in 0..d {
            let raw = out[d + k];
            let log_sigma = raw.clamp(self.log_sigma_min, self.log_sigma_max);
            let inv_var = (-2.0 * log_sigma).exp();
            let diff = out[k] - target[k];
            total += 0.5 * diff * diff * inv_var + log_sigma + HALF_LN_2PI;
            grad[k] = diff * inv_var;
            grad[d + k] = if raw < self.log_sigma_min || raw > self.log_sigma_max {
                0.0
            } else {
                1.0 - diff * diff * inv_var
            };
        }
        total
    }
}

/// `Σ_d (t_d − μ_d)² / (2σ_d²) + log σ_d + ½ log 2π`.
///
/// # Panics
/// On mismatched lengths or non-finite inputs.
pub fn gaussian_nll(out: &GaussianHeadOutput, target: &[f64]) -> f64 {
    assert_eq!(out.mu.len(), target.len(), "target length");
    assert_eq!(out.log_sigma.len(), target.len(), "log sigma length");
    assert!(
        out.mu
            .iter()
            .chain(&out.log_sigma)
            .chain(target)
            .all(|v| v.is_finite()),
        "non-finite NLL input"
    );
    out.mu
        .iter()
        .zip(&out.log_sigma)
        .zip(target)
        .map(|((m, l), t)| (t - m).powi(2) * (-2.0 * l).exp() / 2.0 + l + HALF_LN_2PI)
        .sum()
}

/// `(∂L/∂μ, ∂L/∂log σ)` of [`gaussian_nll`].
pub fn gaussian_nll_grad(out: &GaussianHeadOutput, target: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d_mu = Vec::with_capacity(target.len());
    let mut d_log_sigma = Vec::with_capacity(target.len());
    for ((m, l), t) in out.mu.iter().zip(&out.log_sigma).zip(target) {
        let inv_var = (-2.0 * l).exp();
        d_mu.push((m - t) * inv_var);
        d_log_sigma.push(1.0 - (t - m).powi(2) * inv_var);
    }
    (d_mu, d_log_sigma)
}

/// Sum of squared errors of one row.
pub fn mse(out: &[f64], target: &[f64]) -> f64 {
    out.iter().zip(target).map(|(o, t)| (o - t).powi(2)).sum()
}

/// [`mse`] with its gradient written to `grad`.
pub fn mse_grad(out: &[f64], target: &[f64], grad: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for ((g, o), t) in grad.iter_mut().zip(out).zip(target) {
        let diff = o - t;
        *g = 2.0 * diff;
        total += diff * diff;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn head(mu: f64, log_sigma: f64) -> GaussianHeadOutput {
        GaussianHeadOutput {
            mu: vec![mu],
            log_sigma: vec![log_sigma],
        }
    }

    #[test]
    fn standard_normal_at_mean() {
        let v = gaussian_nll(&head(0.0, 0.0), &[0.0]);
        assert!((v - 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        assert!((v - 0.9189).abs() < 1e-4);
    }

    #[test]
    fn one_sigma_off() {
        let v = gaussian_nll(&head(1.0, 0.0), &[0.0]);
        assert!((v - 1.4189).abs() < 1e-4);
    }

    #[test]
    fn mean_gradient_vanishes_at_target() {
        let out = GaussianHeadOutput {
            mu: vec![0.3, -1.2],
            log_sigma: vec![0.4, -0.7],
        };
        let (d_mu, _) = gaussian_nll_grad(&out, &[0.3, -1.2]);
        assert_eq!(d_mu, vec![0.0, 0.0]);
    }

    #[test]
    fn head_clamps_and_agrees_with_closed_form() {
        let h = GaussianHead::default();
        let raw = [0.5, 9.0];
        let split = h.split(&raw);
        assert_eq!(split.log_sigma, vec![2.0]);
        let mut g = [0.0; 2];
        let v = h.nll_with_grad(&raw, &[0.0], &mut g);
        assert!((v - gaussian_nll(&split, &[0.0])).abs() < 1e-12);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    #[should_panic]
    fn non_finite_input_panics() {
        gaussian_nll(&head(f64::NAN, 0.0), &[0.0]);
    }
}
