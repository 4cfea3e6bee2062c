use rayon::prelude::*;

use super::{Env, Observation, Policy, Provenance, Trajectory, Transition};
use crate::rng::{self, SimRng};
use crate::{Error, Result};

/// Runs one episode of at most `horizon` steps, stopping early on a terminal
/// transition.
pub fn rollout<E, P>(
    env: &E,
    policy: &P,
    horizon: usize,
    rng: &mut SimRng,
) -> Result<Trajectory<E::State, E::Action>>
where
    E: Env + ?Sized,
    P: Policy<E::State, E::Action> + ?Sized,
{
    if horizon == 0 {
        return Err(Error::Contract("rollout horizon must be at least 1".into()));
    }
    let mut state = env.reset(rng);
    let mut transitions = Vec::with_capacity(horizon.min(1024));
    let mut total = 0.0;
    let mut failed = false;
    for step in 0..horizon {
        let action = policy.act(&state, rng);
        let out = env.step(&state, &action, rng).map_err(|e| match e {
            Error::NonFiniteState { detail, .. } => Error::NonFiniteState { step, detail },
            other => other,
        })?;
        if !out.next.is_finite() || !out.reward.is_finite() {
            return Err(Error::NonFiniteState {
                step,
                detail: format!("next state {:?}, reward {}", out.next, out.reward),
            });
        }
        total += out.reward;
        let terminal = out.terminal;
        if terminal {
            failed = env.is_failure(&out.next);
        }
        transitions.push(Transition {
            state: std::mem::replace(&mut state, out.next.clone()),
            action,
            next_state: out.next,
            reward: out.reward,
            terminal,
        });
        if terminal {
            break;
        }
    }
    Ok(Trajectory {
        transitions,
        episode_return: total,
        failed,
        source: Provenance::Unlabeled,
    })
}

/// `episodes` rollouts, episode `i` seeded from stream `(seed, i)`.
pub fn collect<E, P>(
    env: &E,
    policy: &P,
    episodes: usize,
    seed: u64,
    horizon: usize,
) -> Result<Vec<Trajectory<E::State, E::Action>>>
where
    E: Env,
    P: Policy<E::State, E::Action>,
{
    (0..episodes as u64)
        .into_par_iter()
        .map(|i| rollout(env, policy, horizon, &mut rng::stream(seed, i)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalStats {
    pub mean_return: f64,
    pub std_error: f64,
    pub failure_rate: f64,
    pub episodes: usize,
}

impl EvalStats {
    pub fn from_returns(returns: &[f64], failures: usize) -> Self {
        let n = returns.len();
        let mean = returns.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean_return: mean,
            std_error,
            failure_rate: failures as f64 / n as f64,
            episodes: n,
        }
    }
}

/// Mean return, standard error and failure rate over `n_episodes`
/// independent rollouts at the environment's horizon.
///
/// Episode `i` uses stream `(master_seed, i)` and the reduction runs in
/// episode order, so the statistics do not depend on thread scheduling.
pub fn evaluate<E, P>(env: &E, policy: &P, n_episodes: usize, master_seed: u64) -> Result<EvalStats>
where
    E: Env,
    P: Policy<E::State, E::Action>,
{
    if n_episodes == 0 {
        return Err(Error::Contract(
            "evaluate needs at least one episode".into(),
        ));
    }
    let horizon = env.horizon();
    let outcomes: Vec<(f64, bool)> = (0..n_episodes as u64)
        .into_par_iter()
        .map(|i| {
            rollout(env, policy, horizon, &mut rng::stream(master_seed, i))
                .map(|t| (t.episode_return, t.failed))
        })
        .collect::<Result<_>>()?;
    let returns: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let failures = outcomes.iter().filter(|o| o.1).count();
    Ok(EvalStats::from_returns(&returns, failures))
}
