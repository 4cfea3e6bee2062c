use rand::Rng;

use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Multilayer perceptron with `hidden` activation between layers and a linear
/// output layer.
///
/// Layer `l` stores an `out × in` row-major weight block followed by its bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    hidden: Activation,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

fn layer_offsets(sizes: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut at = 0;
    offsets.push(0);
    for w in sizes.windows(2) {
        at += w[0] * w[1] + w[1];
        offsets.push(at);
    }
    offsets
}

/// Per-layer activations and back-propagated deltas, reused across rows.
#[derive(Default)]
struct Workspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Mlp {
    /// All-zero parameters.
    pub fn zeros(sizes: &[usize], hidden: Activation) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let offsets = layer_offsets(sizes);
        let n = *offsets.last().unwrap();
        Self {
            sizes: sizes.to_vec(),
            hidden,
            params: vec![0.0; n],
            offsets,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(sizes: &[usize], hidden: Activation, rng: &mut SimRng) -> Self {
        let mut mlp = Self::zeros(sizes, hidden);
        for l in 0..mlp.num_layers() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w, _) = mlp.layer_mut(l);
            for v in w.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
        }
        mlp
    }

    pub fn from_params(sizes: &[usize], hidden: Activation, params: Vec<f64>) -> Result<Self> {
        let mut mlp = Self::zeros(sizes, hidden);
        if params.len() != mlp.params.len() {
            return Err(Error::Shape {
                expected: mlp.params.len(),
                got: params.len(),
            });
        }
        mlp.params = params;
        Ok(mlp)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn hidden(&self) -> Activation {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(weights, bias)` of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        let block = &self.params[self.offsets[l]..self.offsets[l + 1]];
        block.split_at(i * o)
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        let block = &mut self.params[self.offsets[l]..self.offsets[l + 1]];
        block.split_at_mut(i * o)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut ws = Workspace::default();
        self.forward_cached(input, &mut ws);
        Ok(ws.acts.pop().unwrap())
    }

    fn forward_cached(&self, input: &[f64], ws: &mut Workspace) {
        let layers = self.num_layers();
        ws.acts.resize_with(layers + 1, Vec::new);
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(input);
        for l in 0..layers {
            let (w, b) = self.layer(l);
            let n_in = self.sizes[l];
            let act = if l + 1 == layers {
                Activation::Identity
            } else {
                self.hidden
            };
            let (prev, rest) = ws.acts.split_at_mut(l + 1);
            let x = &prev[l];
            let out = &mut rest[0];
            out.clear();
            out.extend(b.iter().enumerate().map(|(j, bj)| {
                let row = &w[j * n_in..(j + 1) * n_in];
                let z = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bj;
                act.apply(z)
            }));
        }
    }

    /// Mean loss and its exact gradient over `rows`.
    ///
    /// `loss(i, output, grad_out)` returns the loss of row `i` and writes
    /// `dloss/doutput` into `grad_out` (zeroed beforehand).
    pub fn gradient<F>(&self, rows: &[&[f64]], mut loss: F) -> Result<(f64, Vec<f64>)>
    where
        F: FnMut(usize, &[f64], &mut [f64]) -> f64,
    {
        let mut grad = vec![0.0; self.params.len()];
        let mut ws = Workspace::default();
        let mut total = 0.0;
        for (i, row) in rows.iter().enumerate() {
            self.check_input(row)?;
            total += self.accumulate(row, &mut ws, &mut grad, |out, g| loss(i, out, g));
        }
        let n = rows.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((total / n, grad))
    }

    fn accumulate<F>(&self, input: &[f64], ws: &mut Workspace, grad: &mut [f64], loss: F) -> f64
    where
        F: FnOnce(&[f64], &mut [f64]) -> f64,
    {
        self.forward_cached(input, ws);
        let layers = self.num_layers();
        ws.deltas.resize_with(layers, Vec::new);
        let out_dim = self.output_dim();
        let top = &mut ws.deltas[layers - 1];
        top.clear();
        top.resize(out_dim, 0.0);
        let value = loss(&ws.acts[layers], top);

        for l in (0..layers).rev() {
            let n_in = self.sizes[l];
            let off = self.offsets[l];
            let (w, _) = self.layer(l);
            let x = &ws.acts[l];
            let delta = std::mem::take(&mut ws.deltas[l]);
            {
                let (gw, gb) = grad[off..self.offsets[l + 1]].split_at_mut(n_in * delta.len());
                for (j, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    gb[j] += d;
                    for (g, xi) in gw[j * n_in..(j + 1) * n_in].iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            if l > 0 {
                let mut prev = std::mem::take(&mut ws.deltas[l - 1]);
                prev.clear();
                prev.resize(n_in, 0.0);
                for (j, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    for (p, wji) in prev.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                        *p += d * wji;
                    }
                }
                for (p, a) in prev.iter_mut().zip(x) {
                    *p *= self.hidden.derivative_from_output(*a);
                }
                ws.deltas[l - 1] = prev;
            }
            ws.deltas[l] = delta;
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn zero_network_outputs_zero() {
        let mlp = Mlp::zeros(&[3, 64, 64, 2], Activation::Tanh);
        assert_eq!(mlp.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_linear_layer() {
        let mut mlp = Mlp::zeros(&[3, 3], Activation::Tanh);
        let (w, _) = mlp.layer_mut(0);
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
        }
        assert_eq!(
            mlp.forward(&[0.5, -7.0, 2.0]).unwrap(),
            vec![0.5, -7.0, 2.0]
        );
    }

    #[test]
    fn matches_hand_computed_2_2_2_forward() {
        // W1 = [[0.1, -0.2], [0.3, 0.4]], b1 = [0.05, -0.1]
        // W2 = [[0.5, -0.6], [0.7, 0.8]], b2 = [0.01, 0.02]
        let params = vec![
            0.1, -0.2, 0.3, 0.4, 0.05, -0.1, 0.5, -0.6, 0.7, 0.8, 0.01, 0.02,
        ];
        let mlp = Mlp::from_params(&[2, 2, 2], Activation::Tanh, params).unwrap();
        let x = [1.0, 2.0];
        let h0 = (0.1f64 * 1.0 - 0.2 * 2.0 + 0.05).tanh();
        let h1 = (0.3f64 * 1.0 + 0.4 * 2.0 - 0.1).tanh();
        let y0 = 0.5 * h0 - 0.6 * h1 + 0.01;
        let y1 = 0.7 * h0 + 0.8 * h1 + 0.02;
        let out = mlp.forward(&x).unwrap();
        assert!((out[0] - y0).abs() < 1e-15);
        assert!((out[1] - y1).abs() < 1e-15);
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let mlp = Mlp::zeros(&[3, 2], Activation::Tanh);
        assert!(matches!(
            mlp.forward(&[1.0]),
            Err(Error::Shape {
                expected: 3,
                got: 1
            })
        ));
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let mlp = Mlp::init(&[3, 8, 2], Activation::Tanh, &mut rng::stream(1, 0));
        let rows: Vec<&[f64]> = vec![&[0.1, 0.2, 0.3]];
        let (value, grad) = mlp.gradient(&rows, |_, _, _| 4.2).unwrap();
        assert_eq!(value, 4.2);
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn mse_on_scalar_linear_model() {
        // y = w x with w = 0 and one sample (1, 1): d/dw (1 - w)^2 = -2.
        let mlp = Mlp::zeros(&[1, 1], Activation::Tanh);
        let rows: Vec<&[f64]> = vec![&[1.0]];
        let (_, grad) = mlp
            .gradient(&rows, |_, out, g| super::super::mse_grad(out, &[1.0], g))
            .unwrap();
        assert!((grad[0] - -2.0).abs() < 1e-15);
    }
}
