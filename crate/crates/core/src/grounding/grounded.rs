use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ActionTransformer, GroundingMode};
use crate::dynamics::{ForwardModel, InverseModel, TabularForwardModel, TabularInverseModel};
use crate::mdp::{ContinuousEnv, DiscreteEnv, Env, Step, TabularMdpModel, TabularModelSource};
use crate::rng::SimRng;
use crate::Result;

/// Which action the grounded simulator's reward `R(·, s')` sees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardSource {
    /// The transformed action the simulator executed.
    #[default]
    Transformed,
    /// The agent's original action.
    Original,
}

/// Simulator whose actions pass through an [`ActionTransformer`].
pub struct GroundedEnv<E: Env, F, I> {
    pub sim: E,
    pub transformer: Arc<ActionTransformer<E::State, E::Action, F, I>>,
    pub reward_source: RewardSource,
}

impl<E: Env + Clone, F, I> Clone for GroundedEnv<E, F, I> {
    fn clone(&self) -> Self {
        Self {
            sim: self.sim.clone(),
            transformer: Arc::clone(&self.transformer),
            reward_source: self.reward_source,
        }
    }
}

impl<E, F, I> GroundedEnv<E, F, I>
where
    E: Env,
    F: ForwardModel<E::State, E::Action>,
    I: InverseModel<E::State, E::Action>,
{
    pub fn new(
        sim: E,
        transformer: ActionTransformer<E::State, E::Action, F, I>,
        reward_source: RewardSource,
    ) -> Self {
        Self {
            sim,
            transformer: Arc::new(transformer),
            reward_source,
        }
    }

    /// `sim_step(s, g(s, a))`.
    pub fn grounded_step(
        &self,
        state: &E::State,
        action: &E::Action,
        rng: &mut SimRng,
    ) -> Result<Step<E::State>> {
        let transformed = self.transformer.transform_action(state, action, rng);
        let mut out = self.sim.step(state, &transformed, rng)?;
        if self.reward_source == RewardSource::Original {
            out.reward = self.sim.reward(action, &out.next);
        }
        Ok(out)
    }
}

impl<E, F, I> Env for GroundedEnv<E, F, I>
where
    E: Env,
    F: ForwardModel<E::State, E::Action>,
    I: InverseModel<E::State, E::Action>,
{
    type State = E::State;
    type Action = E::Action;

    fn reset(&self, rng: &mut SimRng) -> Self::State {
        self.sim.reset(rng)
    }

    fn step(
        &self,
        state: &Self::State,
        action: &Self::Action,
        rng: &mut SimRng,
    ) -> Result<Step<Self::State>> {
        self.grounded_step(state, action, rng)
    }

    fn reward(&self, action: &Self::Action, next: &Self::State) -> f64 {
        self.sim.reward(action, next)
    }

    fn horizon(&self) -> usize {
        self.sim.horizon()
    }

    fn explore(&self, action: &Self::Action, scale: f64, rng: &mut SimRng) -> Self::Action {
        self.sim.explore(action, scale, rng)
    }

    fn reset_anywhere(&self, rng: &mut SimRng) -> Self::State {
        self.sim.reset_anywhere(rng)
    }

    fn is_failure(&self, state: &Self::State) -> bool {
        self.sim.is_failure(state)
    }
}

impl<E, F, I> DiscreteEnv for GroundedEnv<E, F, I>
where
    E: DiscreteEnv,
    F: ForwardModel<usize, usize>,
    I: InverseModel<usize, usize>,
{
    fn num_states(&self) -> usize {
        self.sim.num_states()
    }
    fn num_actions(&self) -> usize {
        self.sim.num_actions()
    }
}

impl<E, F, I> ContinuousEnv for GroundedEnv<E, F, I>
where
    E: ContinuousEnv,
    F: ForwardModel<E::State, E::Action>,
    I: InverseModel<E::State, E::Action>,
{
    fn state_dim(&self) -> usize {
        self.sim.state_dim()
    }
    fn action_bounds(&self) -> &[(f64, f64)] {
        self.sim.action_bounds()
    }
}

/// Transition table induced by tabular grounding.
///
/// GAT sends all of `(s, a)`'s mass through the forward model's mode; SGAT
/// pushes the whole fitted distribution `P̂(·|s,a)` through the inverse map.
/// Pairs without forward data keep the simulator's own transitions.
impl<E> TabularModelSource for GroundedEnv<E, TabularForwardModel, TabularInverseModel>
where
    E: Env<State = usize, Action = usize> + TabularModelSource,
{
    fn tabular_model(&self) -> TabularMdpModel {
        let sim = self.sim.tabular_model();
        let t = &self.transformer;
        let (ns, na) = (sim.num_states(), sim.num_actions());
        let mut model =
            TabularMdpModel::new(ns, na, sim.start(), sim.horizon(), |a, s| sim.reward(a, s));
        for s in 0..ns {
            if sim.is_terminal(s) {
                model.set_terminal(s, sim.failure_flags()[s]);
            }
        }
        for s in (0..ns).filter(|&s| !sim.is_terminal(s)) {
            for a in 0..na {
                let predicted: Vec<(usize, f64)> = match t.forward.probabilities(s, a) {
                    None => {
                        t.note_unseen();
                        for o in sim.outcomes(s, a) {
                            model.add_with_reward(s, a, o.next, o.prob, o.reward);
                        }
                        continue;
                    }
                    Some(dist) => match t.mode {
                        GroundingMode::Gat => vec![(t.forward.mode(s, a).expect("seen pair"), 1.0)],
                        GroundingMode::Sgat => dist,
                    },
                };
                for (next, p) in predicted {
                    let transformed = t.invert_or_pass(&s, &next, &a);
                    for o in sim.outcomes(s, transformed) {
                        let reward = match self.reward_source {
                            RewardSource::Transformed => o.reward,
                            RewardSource::Original => sim.reward(a, o.next),
                        };
                        model.add_with_reward(s, a, o.next, p * o.prob, reward);
                    }
                }
            }
        }
        model
    }
}
