//! MLP-backed dynamics models for continuous environments.
//!
//! Inputs and targets are standardized with statistics of the training set.
//! The forward model predicts the state change `s' − s` and adds it back, which
//! keeps targets on a common scale across state dimensions.

use std::io::{BufRead, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{require_source, FitDiagnostics, ForwardModel, InverseModel, ModelFamily};
use crate::grounding::GroundingMode;
use crate::mdp::{ActionVec, Provenance, StateVec, Trajectory};
use crate::neural::checkpoint::Lines;
use crate::neural::{
    fit, GaussianHead, GaussianHeadOutput, LossKind, Mlp, Standardizer, TrainConfig,
};
use crate::rng::{self, SimRng};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForwardKind {
    /// Mean and log std per state dimension, trained with Gaussian NLL.
    Gaussian(GaussianHead),
    /// Point prediction trained with MSE.
    Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeuralForwardModel {
    kind: ForwardKind,
    net: Mlp,
    inputs: Standardizer,
    deltas: Standardizer,
    state_dim: usize,
}

fn forward_input(s: &[f64], a: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(s.len() + a.len());
    x.extend_from_slice(s);
    x.extend_from_slice(a);
    x
}

impl NeuralForwardModel {
    /// Fits on `(s, a) → s'` rows. `Point` uses MSE, `Gaussian` uses NLL.
    pub fn fit_rows(
        states: &[Vec<f64>],
        actions: &[Vec<f64>],
        next_states: &[Vec<f64>],
        kind: ForwardKind,
        config: &TrainConfig,
    ) -> Result<(Self, FitDiagnostics)> {
        let n = states.len();
        if n == 0 {
            return Err(Error::NoData("no transitions to fit".into()));
        }
        if actions.len() != n || next_states.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: actions.len().min(next_states.len()),
            });
        }
        let state_dim = states[0].len();
        let raw_inputs: Vec<Vec<f64>> = states
            .iter()
            .zip(actions)
            .map(|(s, a)| forward_input(s, a))
            .collect();
        let raw_deltas: Vec<Vec<f64>> = states
            .iter()
            .zip(next_states)
            .map(|(s, n)| n.iter().zip(s).map(|(n, s)| n - s).collect())
            .collect();
        let inputs = Standardizer::fit(raw_inputs.iter().map(Vec::as_slice))?;
        let deltas = Standardizer::fit(raw_deltas.iter().map(Vec::as_slice))?;
        let x: Vec<Vec<f64>> = raw_inputs.iter().map(|r| inputs.normalize(r)).collect();
        let y: Vec<Vec<f64>> = raw_deltas.iter().map(|r| deltas.normalize(r)).collect();
        let (out_dim, loss) = match kind {
            ForwardKind::Gaussian(head) => (2 * state_dim, LossKind::GaussianNll(head)),
            ForwardKind::Point => (state_dim, LossKind::Mse),
        };
        let mut net = config.network(x[0].len(), out_dim, &mut rng::stream(config.seed, 1));
        let report = fit(&mut net, &x, &y, loss, config)?;
        let model = Self {
            kind,
            net,
            inputs,
            deltas,
            state_dim,
        };
        Ok((
            model,
            FitDiagnostics {
                loss: report.final_loss(),
                transitions: n,
            },
        ))
    }

    pub fn kind(&self) -> ForwardKind {
        self.kind
    }

    /// Predicted next-state distribution in state units. Point models report
    /// `log σ = −∞`.
    pub fn distribution(&self, s: &[f64], a: &[f64]) -> GaussianHeadOutput {
        let x = self.inputs.normalize(&forward_input(s, a));
        let out = self.net.forward(&x).expect("input width fixed at fit time");
        let d = self.state_dim;
        let (mu_n, log_sigma_n) = match self.kind {
            ForwardKind::Gaussian(head) => {
                let split = head.split(&out);
                (split.mu, split.log_sigma)
            }
            ForwardKind::Point => (out, vec![f64::NEG_INFINITY; d]),
        };
        let delta = self.deltas.denormalize(&mu_n);
        GaussianHeadOutput {
            mu: s.iter().zip(&delta).map(|(s, d)| s + d).collect(),
            log_sigma: log_sigma_n
                .iter()
                .zip(&self.deltas.std)
                .map(|(l, sd)| l + sd.ln())
                .collect(),
        }
    }

    /// `forward-model <gaussian|point> <state_dim> <log_sigma_min> <log_sigma_max>`,
    /// then the input and delta standardizers, then the network.
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        let (name, head) = match self.kind {
            ForwardKind::Gaussian(h) => ("gaussian", h),
            ForwardKind::Point => ("point", GaussianHead::default()),
        };
        writeln!(
            w,
            "forward-model {name} {} {:e} {:e}",
            self.state_dim, head.log_sigma_min, head.log_sigma_max
        )?;
        self.inputs.write_text(w)?;
        self.deltas.write_text(w)?;
        self.net.write_text(w)
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let mut lines = Lines::new(r);
        let header = lines.expect("forward-model")?;
        if header.len() != 4 {
            return Err(lines.error("malformed forward-model header"));
        }
        let state_dim: usize = lines.parse(&header[1])?;
        let head = GaussianHead {
            log_sigma_min: lines.parse(&header[2])?,
            log_sigma_max: lines.parse(&header[3])?,
        };
        let kind = match header[0].as_str() {
            "gaussian" => ForwardKind::Gaussian(head),
            "point" => ForwardKind::Point,
            other => return Err(lines.error(format!("unknown forward kind `{other}`"))),
        };
        let inputs = Standardizer::read_lines(&mut lines)?;
        let deltas = Standardizer::read_lines(&mut lines)?;
        let net = Mlp::read_lines(&mut lines)?;
        Ok(Self {
            kind,
            net,
            inputs,
            deltas,
            state_dim,
        })
    }
}

impl ForwardModel<StateVec, ActionVec> for NeuralForwardModel {
    fn predict(&self, s: &StateVec, a: &ActionVec) -> Option<StateVec> {
        Some(StateVec(self.distribution(&s.0, &a.0).mu))
    }

    fn sample(&self, s: &StateVec, a: &ActionVec, rng: &mut SimRng) -> Option<StateVec> {
        let dist = self.distribution(&s.0, &a.0);
        if matches!(self.kind, ForwardKind::Point) {
            return Some(StateVec(dist.mu));
        }
        Some(StateVec(
            dist.mu
                .iter()
                .zip(&dist.log_sigma)
                .map(|(m, l)| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + l.exp() * z
                })
                .collect(),
        ))
    }
}

/// Input encoding of the inverse model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InverseEncoding {
    /// `(s_t, s_{t+1})`.
    #[default]
    Concat,
    /// `(s_t, s_{t+1} − s_t)`.
    Delta,
}

impl InverseEncoding {
    fn encode(self, s: &[f64], next: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * s.len());
        x.extend_from_slice(s);
        match self {
            InverseEncoding::Concat => x.extend_from_slice(next),
            InverseEncoding::Delta => x.extend(next.iter().zip(s).map(|(n, s)| n - s)),
        }
        x
    }
}

/// MSE regression `(s, s') → a`, clamped to the action bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralInverseModel {
    net: Mlp,
    inputs: Standardizer,
    actions: Standardizer,
    encoding: InverseEncoding,
    bounds: Vec<(f64, f64)>,
}

impl NeuralInverseModel {
    pub fn fit_rows(
        states: &[Vec<f64>],
        actions: &[Vec<f64>],
        next_states: &[Vec<f64>],
        encoding: InverseEncoding,
        bounds: &[(f64, f64)],
        config: &TrainConfig,
    ) -> Result<(Self, FitDiagnostics)> {
        let n = states.len();
        if n == 0 {
            return Err(Error::NoData("no transitions to fit".into()));
        }
        let raw: Vec<Vec<f64>> = states
            .iter()
            .zip(next_states)
            .map(|(s, n)| encoding.encode(s, n))
            .collect();
        let inputs = Standardizer::fit(raw.iter().map(Vec::as_slice))?;
        let action_norm = Standardizer::fit(actions.iter().map(Vec::as_slice))?;
        let x: Vec<Vec<f64>> = raw.iter().map(|r| inputs.normalize(r)).collect();
        let y: Vec<Vec<f64>> = actions.iter().map(|a| action_norm.normalize(a)).collect();
        let mut net = config.network(x[0].len(), bounds.len(), &mut rng::stream(config.seed, 2));
        let report = fit(&mut net, &x, &y, LossKind::Mse, config)?;
        let model = Self {
            net,
            inputs,
            actions: action_norm,
            encoding,
            bounds: bounds.to_vec(),
        };
        Ok((
            model,
            FitDiagnostics {
                loss: report.final_loss(),
                transitions: n,
            },
        ))
    }

    pub fn invert_raw(&self, s: &[f64], next: &[f64]) -> Vec<f64> {
        let x = self.inputs.normalize(&self.encoding.encode(s, next));
        let out = self.net.forward(&x).expect("input width fixed at fit time");
        self.actions
            .denormalize(&out)
            .iter()
            .zip(&self.bounds)
            .map(|(a, &(lo, hi))| {
                if a.is_nan() {
                    0.0f64.clamp(lo, hi)
                } else {
                    a.clamp(lo, hi)
                }
            })
            .collect()
    }
}

impl InverseModel<StateVec, ActionVec> for NeuralInverseModel {
    fn invert(&self, s: &StateVec, next: &StateVec) -> Option<ActionVec> {
        Some(ActionVec(self.invert_raw(&s.0, &next.0)))
    }
}

/// Neural forward/inverse models for continuous environments.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralFamily {
    pub train: TrainConfig,
    pub encoding: InverseEncoding,
    pub action_bounds: Vec<(f64, f64)>,
}

type Columns = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>);

fn columns(trajectories: &[Trajectory<StateVec, ActionVec>]) -> Columns {
    let mut s = Vec::new();
    let mut a = Vec::new();
    let mut n = Vec::new();
    for t in trajectories.iter().flat_map(|t| &t.transitions) {
        s.push(t.state.0.clone());
        a.push(t.action.0.clone());
        n.push(t.next_state.0.clone());
    }
    (s, a, n)
}

impl ModelFamily<StateVec, ActionVec> for NeuralFamily {
    type Forward = NeuralForwardModel;
    type Inverse = NeuralInverseModel;

    fn fit_forward(
        &self,
        real: &[Trajectory<StateVec, ActionVec>],
        mode: GroundingMode,
        seed: u64,
    ) -> Result<(NeuralForwardModel, FitDiagnostics)> {
        require_source(real, Provenance::Real)?;
        let (s, a, n) = columns(real);
        let kind = match mode {
            GroundingMode::Gat => ForwardKind::Point,
            GroundingMode::Sgat => ForwardKind::Gaussian(self.train.head()),
        };
        let config = TrainConfig {
            seed,
            ..self.train.clone()
        };
        NeuralForwardModel::fit_rows(&s, &a, &n, kind, &config)
    }

    fn fit_inverse(
        &self,
        sim: &[Trajectory<StateVec, ActionVec>],
        seed: u64,
    ) -> Result<(NeuralInverseModel, FitDiagnostics)> {
        require_source(sim, Provenance::Sim)?;
        let (s, a, n) = columns(sim);
        let config = TrainConfig {
            seed,
            ..self.train.clone()
        };
        NeuralInverseModel::fit_rows(&s, &a, &n, self.encoding, &self.action_bounds, &config)
    }
}
