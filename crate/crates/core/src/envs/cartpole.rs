//! Cart-pole with a continuous force action.
//!
//! State is `(x, x_dot, theta, theta_dot)`; the action in `[-1, 1]` scales
//! `force_scale`. The "real" variant multiplies the pole mass and adds
//! zero-mean Gaussian noise to the commanded action before clamping.
//! Integration is semi-implicit Euler: velocities first, then positions from
//! the updated velocities.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::mdp::{ActionVec, ContinuousEnv, Env, StateVec, Step};
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub force_scale: f64,
    pub dt: f64,
    pub angle_threshold: f64,
    pub position_threshold: f64,
    pub horizon: usize,
    /// Pole mass multiplier of the "real" variant.
    pub pole_mass_factor: f64,
    /// Std of the Gaussian noise added to actions.
    pub action_noise_std: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            mass_cart: 1.0,
            mass_pole: 0.1,
            half_length: 0.5,
            force_scale: 10.0,
            dt: 0.02,
            angle_threshold: 12.0_f64.to_radians(),
            position_threshold: 2.4,
            horizon: 200,
            pole_mass_factor: 1.0,
            action_noise_std: 0.0,
        }
    }
}

impl CartPoleParams {
    pub fn sim() -> Self {
        Self::default()
    }

    pub fn real(pole_mass_factor: f64, action_noise_std: f64) -> Self {
        Self {
            pole_mass_factor,
            action_noise_std,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gravity", self.gravity),
            ("mass_cart", self.mass_cart),
            ("mass_pole", self.mass_pole),
            ("half_length", self.half_length),
            ("force_scale", self.force_scale),
            ("dt", self.dt),
            ("angle_threshold", self.angle_threshold),
            ("position_threshold", self.position_threshold),
            ("pole_mass_factor", self.pole_mass_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(
                    format!("cartpole.{name}"),
                    format!("{v} must be positive"),
                ));
            }
        }
        if !(self.action_noise_std >= 0.0 && self.action_noise_std.is_finite()) {
            return Err(Error::config("cartpole.action_noise_std", "must be >= 0"));
        }
        if self.horizon == 0 {
            return Err(Error::config("cartpole.horizon", "must be at least 1"));
        }
        Ok(())
    }

    pub fn effective_pole_mass(&self) -> f64 {
        self.mass_pole * self.pole_mass_factor
    }

    /// `(x_ddot, theta_ddot)` under horizontal force `force`.
    pub fn accelerations(&self, state: &[f64], force: f64) -> (f64, f64) {
        let (theta, theta_dot) = (state[2], state[3]);
        let m_pole = self.effective_pole_mass();
        let total = self.mass_cart + m_pole;
        let pml = m_pole * self.half_length;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pml * theta_dot * theta_dot * sin) / total;
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.half_length * (4.0 / 3.0 - m_pole * cos * cos / total));
        let x_acc = temp - pml * theta_acc * cos / total;
        (x_acc, theta_acc)
    }
}

const ACTION_BOUNDS: [(f64, f64); 1] = [(-1.0, 1.0)];

#[derive(Clone, Debug)]
pub struct CartPole {
    params: CartPoleParams,
    noise: Option<Normal<f64>>,
}

impl CartPole {
    pub fn new(params: CartPoleParams) -> Result<Self> {
        params.validate()?;
        let noise = (params.action_noise_std > 0.0)
            .then(|| Normal::new(0.0, params.action_noise_std).expect("validated std"));
        Ok(Self { params, noise })
    }

    pub fn params(&self) -> &CartPoleParams {
        &self.params
    }

    pub fn is_out_of_bounds(&self, s: &[f64]) -> bool {
        s[0].abs() > self.params.position_threshold || s[2].abs() > self.params.angle_threshold
    }

    /// One integration step under commanded action `action`.
    pub fn cartpole_step(
        &self,
        state: &StateVec,
        action: f64,
        rng: &mut SimRng,
    ) -> Result<Step<StateVec>> {
        if !(action.abs() <= 1.0) {
            return Err(Error::Contract(format!("action {action} outside [-1, 1]")));
        }
        let s = &state.0;
        if s.len() != 4 {
            return Err(Error::Shape {
                expected: 4,
                got: s.len(),
            });
        }
        if !s.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteState {
                step: 0,
                detail: format!("cart-pole input state {s:?}"),
            });
        }
        let eps = self.noise.map_or(0.0, |n| n.sample(rng));
        let force = (action + eps).clamp(-1.0, 1.0) * self.params.force_scale;
        let (x_acc, theta_acc) = self.params.accelerations(s, force);
        let dt = self.params.dt;
        let x_dot = s[1] + dt * x_acc;
        let x = s[0] + dt * x_dot;
        let theta_dot = s[3] + dt * theta_acc;
        let theta = s[2] + dt * theta_dot;
        let next = vec![x, x_dot, theta, theta_dot];
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteState {
                step: 0,
                detail: format!("cart-pole successor {next:?}"),
            });
        }
        let failed = self.is_out_of_bounds(&next);
        Ok(Step {
            next: StateVec(next),
            reward: if failed { 0.0 } else { 1.0 },
            terminal: failed,
        })
    }
}

impl Env for CartPole {
    type State = StateVec;
    type Action = ActionVec;

    fn reset(&self, rng: &mut SimRng) -> StateVec {
        StateVec((0..4).map(|_| rng.random_range(-0.05..0.05)).collect())
    }

    fn step(
        &self,
        state: &StateVec,
        action: &ActionVec,
        rng: &mut SimRng,
    ) -> Result<Step<StateVec>> {
        if action.0.len() != 1 {
            return Err(Error::Shape {
                expected: 1,
                got: action.0.len(),
            });
        }
        self.cartpole_step(state, action.0[0], rng)
    }

    fn reward(&self, _action: &ActionVec, next: &StateVec) -> f64 {
        if self.is_out_of_bounds(&next.0) {
            0.0
        } else {
            1.0
        }
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn explore(&self, action: &ActionVec, scale: f64, rng: &mut SimRng) -> ActionVec {
        let n = Normal::new(0.0, scale).expect("exploration std must be finite and >= 0");
        ActionVec(
            action
                .0
                .iter()
                .map(|a| (a + n.sample(rng)).clamp(-1.0, 1.0))
                .collect(),
        )
    }

    fn reset_anywhere(&self, rng: &mut SimRng) -> StateVec {
        let x = 0.5 * self.params.position_threshold;
        let th = 0.75 * self.params.angle_threshold;
        StateVec(vec![
            rng.random_range(-x..x),
            rng.random_range(-1.0..1.0),
            rng.random_range(-th..th),
            rng.random_range(-1.0..1.0),
        ])
    }

    fn is_failure(&self, state: &StateVec) -> bool {
        self.is_out_of_bounds(&state.0)
    }
}

impl ContinuousEnv for CartPole {
    fn state_dim(&self) -> usize {
        4
    }

    fn action_bounds(&self) -> &[(f64, f64)] {
        &ACTION_BOUNDS
    }
}
