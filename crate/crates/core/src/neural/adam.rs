use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count");
        assert_eq!(grad.len(), self.m.len(), "gradient length");
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut adam = Adam::new(2, AdamConfig::default());
        let mut p = [1.0, 2.0];
        adam.step(&mut p, &[0.5, -0.5]);
        let (m_before, _) = adam.moments();
        let m_before = m_before.to_vec();
        let p_before = p;
        adam.step(&mut p, &[0.0, 0.0]);
        // Params still move on momentum; moments must shrink by beta1.
        let (m_after, _) = adam.moments();
        for (a, b) in m_after.iter().zip(&m_before) {
            assert!((a - 0.9 * b).abs() < 1e-15);
        }
        let mut fresh = Adam::new(2, AdamConfig::default());
        let mut q = p_before;
        fresh.step(&mut q, &[0.0, 0.0]);
        assert_eq!(q, p_before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(3, AdamConfig::default());
        let mut p = [0.0, 1.0, -1.0];
        let g = [3.0, -0.01, 250.0];
        adam.step(&mut p, &g);
        let expected = [-1e-3, 1.0 + 1e-3, -1.0 - 1e-3];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn converges_on_quadratic() {
        let mut adam = Adam::new(
            1,
            AdamConfig {
                learning_rate: 1e-2,
                ..AdamConfig::default()
            },
        );
        let mut w = [1.0_f64];
        let mut prev = f64::INFINITY;
        let mut steps = 0;
        while w[0].abs() >= 0.01 {
            let g = [2.0 * w[0]];
            adam.step(&mut w, &g);
            steps += 1;
            assert!(steps <= 1000, "no convergence, w = {}", w[0]);
            if steps < 80 {
                assert!(w[0].abs() <= prev, "not monotone before overshoot");
            }
            prev = w[0].abs();
        }
    }
}
