use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Activation, Adam, AdamConfig, GaussianHead, Mlp};
use crate::rng::{self, SimRng};
use crate::{Error, Result};

/// Per-dimension mean/std normalization fitted on a training set.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Dimensions with (near) zero spread get unit scale.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut iter = rows.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::NoData("standardizer needs at least one row".into()))?;
        let d = first.len();
        let mut n = 1.0;
        let mut mean = first.to_vec();
        let mut m2 = vec![0.0; d];
        for row in iter {
            if row.len() != d {
                return Err(Error::Shape {
                    expected: d,
                    got: row.len(),
                });
            }
            n += 1.0;
            for k in 0..d {
                let delta = row[k] - mean[k];
                mean[k] += delta / n;
                m2[k] += delta * (row[k] - mean[k]);
            }
        }
        let std = m2
            .iter()
            .map(|m| {
                let s = (m / n).sqrt();
                if s > 1e-8 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.extend(
            x.iter()
                .zip(&self.mean)
                .zip(&self.std)
                .map(|((v, m), s)| (v - m) / s),
        );
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        self.normalize_into(x, &mut out);
        out
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| v * s + m)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub log_sigma_min: f64,
    pub log_sigma_max: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            epochs: 50,
            batch_size: 64,
            adam: AdamConfig::default(),
            log_sigma_min: -5.0,
            log_sigma_max: 2.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn head(&self) -> GaussianHead {
        GaussianHead {
            log_sigma_min: self.log_sigma_min,
            log_sigma_max: self.log_sigma_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("neural.batch_size", "must be at least 1"));
        }
        if self.log_sigma_min >= self.log_sigma_max {
            return Err(Error::config(
                "neural.log_sigma_min",
                "must be below log_sigma_max",
            ));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::config(
                "neural.adam.learning_rate",
                "must be positive",
            ));
        }
        Ok(())
    }

    /// Network with this config's hidden layers between `input` and `output`.
    pub fn network(&self, input: usize, output: usize, rng: &mut SimRng) -> Mlp {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(input);
        sizes.extend(&self.hidden);
        sizes.push(output);
        Mlp::init(&sizes, Activation::Tanh, rng)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LossKind {
    Mse,
    GaussianNll(GaussianHead),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(f64::NAN)
    }
}

/// Minibatch Adam on `(inputs[i], targets[i])` pairs.
pub fn fit(
    mlp: &mut Mlp,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    loss: LossKind,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(Error::NoData("no training rows".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::Shape {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    let mut adam = Adam::new(mlp.params().len(), config.adam);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut shuffle = rng::stream(config.seed, 0x7261_696e);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let rows: Vec<&[f64]> = batch.iter().map(|&i| inputs[i].as_slice()).collect();
            let (value, grad) = mlp.gradient(&rows, |k, out, g| {
                let target = &targets[batch[k]];
                match loss {
                    LossKind::Mse => super::mse_grad(out, target, g),
                    LossKind::GaussianNll(head) => head.nll_with_grad(out, target, g),
                }
            })?;
            total += value * batch.len() as f64;
            adam.step(mlp.params_mut(), &grad);
        }
        epoch_losses.push(total / inputs.len() as f64);
    }
    if mlp.params().iter().any(|p| !p.is_finite()) {
        return Err(Error::Contract(
            "training produced non-finite parameters".into(),
        ));
    }
    Ok(TrainReport { epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_round_trip_and_constant_dims() {
        let rows = [vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        let z = s.normalize(&[3.0, 5.0]);
        assert_eq!(z, vec![1.0, 0.0]);
        assert_eq!(s.denormalize(&z), vec![3.0, 5.0]);
    }

    #[test]
    fn fits_a_line() {
        let inputs: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 / 100.0 - 1.0]).collect();
        let targets: Vec<Vec<f64>> = inputs.iter().map(|x| vec![0.5 * x[0] - 0.2]).collect();
        let cfg = TrainConfig {
            hidden: vec![8],
            epochs: 300,
            batch_size: 32,
            adam: AdamConfig {
                learning_rate: 1e-2,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        };
        let mut mlp = cfg.network(1, 1, &mut rng::stream(3, 0));
        let report = fit(&mut mlp, &inputs, &targets, LossKind::Mse, &cfg).unwrap();
        assert!(report.final_loss() < 1e-3, "{}", report.final_loss());
    }
}
