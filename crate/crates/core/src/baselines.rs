//! Comparison policies that do not ground the simulator.
//!
//! The no-grounding baseline is simply the improver run on the raw simulator;
//! the action-noise envelope trains on a simulator whose actions are jittered.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mdp::{evaluate, ActionVec, ContinuousEnv, Env, EvalStats, Policy, StateVec, Step};
use crate::policy_opt::PolicyImprover;
use crate::rng::{self, SimRng};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AneConfig {
    /// Std of the zero-mean Gaussian added to every action.
    pub sigma: f64,
}

impl Default for AneConfig {
    fn default() -> Self {
        Self { sigma: 0.1 }
    }
}

/// Continuous env whose actions are perturbed and clamped before stepping.
#[derive(Clone, Debug)]
pub struct AneEnv<E> {
    pub base: E,
    sigma: f64,
    noise: Option<Normal<f64>>,
}

/// Wraps `env` in an action-noise envelope.
pub fn ane_wrap<E: ContinuousEnv>(env: E, config: AneConfig) -> Result<AneEnv<E>> {
    if !(config.sigma >= 0.0 && config.sigma.is_finite()) {
        return Err(Error::config(
            "ane.sigma",
            "must be a finite non-negative number",
        ));
    }
    let noise = (config.sigma > 0.0).then(|| Normal::new(0.0, config.sigma).expect("validated"));
    Ok(AneEnv {
        base: env,
        sigma: config.sigma,
        noise,
    })
}

impl<E: ContinuousEnv> AneEnv<E> {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The action actually executed. Draws nothing when `σ = 0`.
    pub fn perturb(&self, action: &ActionVec, rng: &mut SimRng) -> ActionVec {
        let Some(noise) = &self.noise else {
            return action.clone();
        };
        ActionVec(
            action
                .0
                .iter()
                .zip(self.base.action_bounds())
                .map(|(a, &(lo, hi))| (a + noise.sample(rng)).clamp(lo, hi))
                .collect(),
        )
    }
}

impl<E: ContinuousEnv> Env for AneEnv<E> {
    type State = StateVec;
    type Action = ActionVec;

    fn reset(&self, rng: &mut SimRng) -> StateVec {
        self.base.reset(rng)
    }

    fn step(
        &self,
        state: &StateVec,
        action: &ActionVec,
        rng: &mut SimRng,
    ) -> Result<Step<StateVec>> {
        let executed = self.perturb(action, rng);
        self.base.step(state, &executed, rng)
    }

    fn reward(&self, action: &ActionVec, next: &StateVec) -> f64 {
        self.base.reward(action, next)
    }

    fn horizon(&self) -> usize {
        self.base.horizon()
    }

    fn explore(&self, action: &ActionVec, scale: f64, rng: &mut SimRng) -> ActionVec {
        self.base.explore(action, scale, rng)
    }

    fn reset_anywhere(&self, rng: &mut SimRng) -> StateVec {
        self.base.reset_anywhere(rng)
    }

    fn is_failure(&self, state: &StateVec) -> bool {
        self.base.is_failure(state)
    }
}

impl<E: ContinuousEnv> ContinuousEnv for AneEnv<E> {
    fn state_dim(&self) -> usize {
        self.base.state_dim()
    }

    fn action_bounds(&self) -> &[(f64, f64)] {
        self.base.action_bounds()
    }
}

#[derive(Clone, Debug)]
pub struct AneCandidate<P> {
    pub sigma: f64,
    pub policy: P,
    pub real: EvalStats,
}

#[derive(Clone, Debug)]
pub struct AneSearch<P> {
    /// Every candidate in input order.
    pub candidates: Vec<AneCandidate<P>>,
    /// Index of the winner: highest real mean return, ties to smaller σ.
    pub best: usize,
}

impl<P> AneSearch<P> {
    pub fn best(&self) -> &AneCandidate<P> {
        &self.candidates[self.best]
    }
}

/// Trains one policy per σ on the wrapped simulator and keeps the one with the
/// best real return. Every candidate is evaluated on the same real episodes.
#[allow(clippy::too_many_arguments)]
pub fn ane_grid_search<Sim, Real, Imp, P>(
    sigmas: &[f64],
    sim: &Sim,
    improver: &Imp,
    initial: &P,
    real: &Real,
    eval_episodes: usize,
    seed: u64,
) -> Result<AneSearch<P>>
where
    Sim: ContinuousEnv + Clone,
    Real: ContinuousEnv,
    Imp: PolicyImprover<AneEnv<Sim>, Policy = P>,
    P: Policy<StateVec, ActionVec> + Clone + Send,
{
    if sigmas.is_empty() {
        return Err(Error::config(
            "ane.sigmas",
            "at least one candidate is required",
        ));
    }
    let train_seed = rng::derive(seed, 1);
    let eval_seed = rng::derive(seed, 2);
    let candidates = sigmas
        .par_iter()
        .map(|&sigma| {
            let env = ane_wrap(sim.clone(), AneConfig { sigma })?;
            let policy = improver.improve(&env, initial, train_seed)?;
            let real = evaluate(real, &policy, eval_episodes, eval_seed)?;
            Ok(AneCandidate {
                sigma,
                policy,
                real,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = (0..candidates.len())
        .reduce(|b, i| {
            let (cb, ci) = (&candidates[b], &candidates[i]);
            let better = ci.real.mean_return > cb.real.mean_return
                || (ci.real.mean_return == cb.real.mean_return && ci.sigma < cb.sigma);
            if better {
                i
            } else {
                b
            }
        })
        .expect("non-empty");
    Ok(AneSearch { candidates, best })
}
