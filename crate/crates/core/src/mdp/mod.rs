//! Environment and policy contracts shared by every other module.
//!
//! Environments are immutable descriptions: `step` is a pure function of the state,
//! the action and the supplied random stream. That is what lets rollouts run
//! in parallel and still reproduce exactly.

mod rollout;
mod tabular;

use std::fmt::Debug;

use rand::Rng;

use crate::rng::SimRng;
use crate::Result;

pub use rollout::{collect, evaluate, rollout, EvalStats};
pub use tabular::{Outcome, TabularMdpModel, TabularModelSource};

/// Continuous state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVec(pub Vec<f64>);

/// Continuous action vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionVec(pub Vec<f64>);

impl StateVec {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl ActionVec {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Finiteness check applied to every state a rollout produces.
pub trait Observation {
    fn is_finite(&self) -> bool;
}

impl Observation for usize {
    fn is_finite(&self) -> bool {
        true
    }
}

impl Observation for StateVec {
    fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Result of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step<S> {
    pub next: S,
    pub reward: f64,
    pub terminal: bool,
}

/// Where a trajectory came from. Forward models only accept `Real` data,
/// inverse models only `Sim` data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Unlabeled,
    Real,
    Sim,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition<S, A> {
    pub state: S,
    pub action: A,
    pub next_state: S,
    pub reward: f64,
    pub terminal: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S, A> {
    pub transitions: Vec<Transition<S, A>>,
    pub episode_return: f64,
    /// The episode ended in a failure state (cliff, fallen pole).
    pub failed: bool,
    pub source: Provenance,
}

impl<S: PartialEq, A> Trajectory<S, A> {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn with_source(mut self, source: Provenance) -> Self {
        self.source = source;
        self
    }

    /// Chaining, return additivity and terminal placement.
    pub fn is_consistent(&self) -> bool {
        let chained = self
            .transitions
            .windows(2)
            .all(|w| w[0].next_state == w[1].state);
        let total: f64 = self.transitions.iter().map(|t| t.reward).sum();
        let n = self.transitions.len();
        let terminal_ok = self
            .transitions
            .iter()
            .enumerate()
            .all(|(i, t)| !t.terminal || i + 1 == n);
        chained && (total - self.episode_return).abs() <= 1e-9 * total.abs().max(1.0) && terminal_ok
    }
}

/// Behavioral contract of an environment.
pub trait Env: Send + Sync {
    type State: Clone + PartialEq + Debug + Observation + Send + Sync;
    type Action: Clone + PartialEq + Debug + Send + Sync;

    fn reset(&self, rng: &mut SimRng) -> Self::State;

    fn step(
        &self,
        state: &Self::State,
        action: &Self::Action,
        rng: &mut SimRng,
    ) -> Result<Step<Self::State>>;

    /// `R(a, s')`.
    fn reward(&self, action: &Self::Action, next: &Self::State) -> f64;

    /// Default episode length cap.
    fn horizon(&self) -> usize;

    /// Perturbs an action for data collection. `scale` is an exploration
    /// probability for discrete actions and a Gaussian std for continuous ones.
    fn explore(&self, action: &Self::Action, scale: f64, rng: &mut SimRng) -> Self::Action;

    /// Start state for exploring-starts data collection in a simulator.
    fn reset_anywhere(&self, rng: &mut SimRng) -> Self::State {
        self.reset(rng)
    }

    fn is_failure(&self, _state: &Self::State) -> bool {
        false
    }
}

pub trait DiscreteEnv: Env<State = usize, Action = usize> {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
}

pub trait ContinuousEnv: Env<State = StateVec, Action = ActionVec> {
    fn state_dim(&self) -> usize;
    /// Inclusive `(low, high)` per action dimension.
    fn action_bounds(&self) -> &[(f64, f64)];

    fn action_dim(&self) -> usize {
        self.action_bounds().len()
    }
}

impl<E: Env + ?Sized> Env for &E {
    type State = E::State;
    type Action = E::Action;

    fn reset(&self, rng: &mut SimRng) -> Self::State {
        (**self).reset(rng)
    }
    fn step(
        &self,
        s: &Self::State,
        a: &Self::Action,
        rng: &mut SimRng,
    ) -> Result<Step<Self::State>> {
        (**self).step(s, a, rng)
    }
    fn reward(&self, a: &Self::Action, next: &Self::State) -> f64 {
        (**self).reward(a, next)
    }
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn explore(&self, a: &Self::Action, scale: f64, rng: &mut SimRng) -> Self::Action {
        (**self).explore(a, scale, rng)
    }
    fn reset_anywhere(&self, rng: &mut SimRng) -> Self::State {
        (**self).reset_anywhere(rng)
    }
    fn is_failure(&self, s: &Self::State) -> bool {
        (**self).is_failure(s)
    }
}

/// Resets through [`Env::reset_anywhere`]; everything else delegates.
#[derive(Clone, Debug)]
pub struct ExploringStarts<E>(pub E);

impl<E: Env> Env for ExploringStarts<E> {
    type State = E::State;
    type Action = E::Action;

    fn reset(&self, rng: &mut SimRng) -> Self::State {
        self.0.reset_anywhere(rng)
    }
    fn step(
        &self,
        s: &Self::State,
        a: &Self::Action,
        rng: &mut SimRng,
    ) -> Result<Step<Self::State>> {
        self.0.step(s, a, rng)
    }
    fn reward(&self, a: &Self::Action, next: &Self::State) -> f64 {
        self.0.reward(a, next)
    }
    fn horizon(&self) -> usize {
        self.0.horizon()
    }
    fn explore(&self, a: &Self::Action, scale: f64, rng: &mut SimRng) -> Self::Action {
        self.0.explore(a, scale, rng)
    }
    fn is_failure(&self, s: &Self::State) -> bool {
        self.0.is_failure(s)
    }
}

pub trait Policy<S, A>: Send + Sync {
    fn act(&self, state: &S, rng: &mut SimRng) -> A;
}

impl<S, A, P: Policy<S, A> + ?Sized> Policy<S, A> for &P {
    fn act(&self, state: &S, rng: &mut SimRng) -> A {
        (**self).act(state, rng)
    }
}

/// Policy with a flat parameter vector `θ`.
pub trait ParametricPolicy: Clone {
    fn params(&self) -> &[f64];
    fn with_params(&self, params: &[f64]) -> Self;
}

/// One action per state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TabularPolicy(pub Vec<usize>);

impl Policy<usize, usize> for TabularPolicy {
    fn act(&self, state: &usize, _rng: &mut SimRng) -> usize {
        self.0[*state]
    }
}

/// Always returns the same action.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantPolicy<A>(pub A);

impl<S, A: Clone + Send + Sync> Policy<S, A> for ConstantPolicy<A> {
    fn act(&self, _state: &S, _rng: &mut SimRng) -> A {
        self.0.clone()
    }
}

/// Affine state feedback clamped to the action bounds:
/// `a_j = clamp(Σ_i W[j][i] s_i + b_j)`.
///
/// Parameters are laid out row-major per action dimension, each row being the
/// state weights followed by the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPolicy {
    params: Vec<f64>,
    state_dim: usize,
    bounds: Vec<(f64, f64)>,
}

impl LinearPolicy {
    pub fn zeros(state_dim: usize, bounds: Vec<(f64, f64)>) -> Self {
        let params = vec![0.0; (state_dim + 1) * bounds.len()];
        Self {
            params,
            state_dim,
            bounds,
        }
    }

    pub fn for_env<E: ContinuousEnv>(env: &E) -> Self {
        Self::zeros(env.state_dim(), env.action_bounds().to_vec())
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn action_for(&self, state: &[f64]) -> ActionVec {
        let row = self.state_dim + 1;
        let values = self
            .bounds
            .iter()
            .enumerate()
            .map(|(j, &(lo, hi))| {
                let w = &self.params[j * row..(j + 1) * row];
                let raw: f64 = w[..self.state_dim]
                    .iter()
                    .zip(state)
                    .map(|(w, s)| w * s)
                    .sum::<f64>()
                    + w[self.state_dim];
                if raw.is_nan() {
                    0.0f64.clamp(lo, hi)
                } else {
                    raw.clamp(lo, hi)
                }
            })
            .collect();
        ActionVec(values)
    }
}

impl Policy<StateVec, ActionVec> for LinearPolicy {
    fn act(&self, state: &StateVec, _rng: &mut SimRng) -> ActionVec {
        self.action_for(&state.0)
    }
}

impl ParametricPolicy for LinearPolicy {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn with_params(&self, params: &[f64]) -> Self {
        assert_eq!(params.len(), self.params.len(), "parameter count");
        Self {
            params: params.to_vec(),
            ..self.clone()
        }
    }
}

/// Runs `policy` and perturbs its actions through [`Env::explore`].
pub struct Exploring<'a, E, P> {
    pub env: &'a E,
    pub policy: &'a P,
    pub scale: f64,
}

impl<E: Env, P: Policy<E::State, E::Action>> Policy<E::State, E::Action> for Exploring<'_, E, P> {
    fn act(&self, state: &E::State, rng: &mut SimRng) -> E::Action {
        let a = self.policy.act(state, rng);
        if self.scale > 0.0 {
            self.env.explore(&a, self.scale, rng)
        } else {
            a
        }
    }
}

/// Uniformly random discrete action.
pub(crate) fn uniform_action(num_actions: usize, rng: &mut SimRng) -> usize {
    rng.random_range(0..num_actions)
}
