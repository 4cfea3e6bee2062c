use serde::{Deserialize, Serialize};

use super::PolicyImprover;
use crate::mdp::{Env, TabularMdpModel, TabularModelSource, TabularPolicy};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyIterationConfig {
    /// Sup-norm change at which an evaluation sweep loop stops.
    pub tolerance: f64,
    pub max_improvements: usize,
    pub max_sweeps: usize,
}

impl Default for PolicyIterationConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_improvements: 100,
            max_sweeps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyIterationResult {
    pub policy: TabularPolicy,
    pub values: Vec<f64>,
    /// Improvement steps that changed the policy.
    pub improvements: usize,
}

/// States from which some policy terminates with probability one, and for
/// each of them an action doing so.
///
/// Works as a fixpoint: an action is admissible while all of its outcomes stay
/// inside the candidate set (or hit a terminal state), and a candidate
/// survives if admissible actions give it a path to a terminal state. The
/// returned action is the lowest admissible one that can drop a layer closer
/// to the terminal set; other states get action 0.
fn proper_region(model: &TabularMdpModel) -> (Vec<bool>, TabularPolicy) {
    let ns = model.num_states();
    let terminal = model.terminal_flags();
    let mut region: Vec<bool> = terminal.iter().map(|t| !t).collect();
    loop {
        let admissible = |s: usize, a: usize, region: &[bool]| {
            model
                .outcomes(s, a)
                .iter()
                .all(|o| region[o.next] || terminal[o.next])
        };
        let mut reached: Vec<bool> = terminal.to_vec();
        let mut policy = vec![0; ns];
        let mut pending: Vec<usize> = (0..ns).filter(|&s| region[s]).collect();
        loop {
            // Membership is frozen per layer so each state descends strictly.
            let snapshot = reached.clone();
            let before = pending.len();
            pending.retain(|&s| {
                let exit = (0..model.num_actions()).find(|&a| {
                    admissible(s, a, &region)
                        && model
                            .outcomes(s, a)
                            .iter()
                            .any(|o| o.prob > 0.0 && snapshot[o.next])
                });
                match exit {
                    Some(a) => {
                        policy[s] = a;
                        reached[s] = true;
                        false
                    }
                    None => true,
                }
            });
            if pending.is_empty() || pending.len() == before {
                break;
            }
        }
        if pending.is_empty() {
            return (region, TabularPolicy(policy));
        }
        for s in pending {
            region[s] = false;
        }
    }
}

fn q_value(model: &TabularMdpModel, values: &[f64], s: usize, a: usize) -> f64 {
    model
        .outcomes(s, a)
        .iter()
        .map(|o| o.prob * (o.reward + values[o.next]))
        .sum()
}

/// Gauss-Seidel evaluation of `policy`, warm-started from `values`.
fn evaluate_policy(
    model: &TabularMdpModel,
    region: &[bool],
    policy: &TabularPolicy,
    values: &mut [f64],
    config: &PolicyIterationConfig,
) -> Result<()> {
    for sweep in 0..config.max_sweeps {
        let mut delta: f64 = 0.0;
        for s in (0..model.num_states()).filter(|&s| region[s]) {
            let v = q_value(model, values, s, policy.0[s]);
            delta = delta.max((v - values[s]).abs());
            values[s] = v;
        }
        if !delta.is_finite() || values.iter().any(|v| v.is_finite() && v.abs() > 1e15) {
            return Err(Error::EvaluationDiverged(sweep));
        }
        if delta < config.tolerance {
            return Ok(());
        }
    }
    Err(Error::EvaluationDiverged(config.max_sweeps))
}

/// Undiscounted policy iteration on an episodic model. Terminal states have
/// value zero; greedy ties go to the lowest action index.
///
/// States that no policy can bring to a terminal state with probability one
/// get value `-inf` and action 0, and actions risking entry into them are
/// never chosen. The start state must not be one of them.
pub fn policy_iteration(
    model: &TabularMdpModel,
    config: &PolicyIterationConfig,
) -> Result<PolicyIterationResult> {
    model.validate()?;
    if !(config.tolerance > 0.0) {
        return Err(Error::config(
            "policy_iteration.tolerance",
            "must be positive",
        ));
    }
    let (region, mut policy) = proper_region(model);
    if !region[model.start()] && !model.is_terminal(model.start()) {
        return Err(Error::NonEpisodic(model.start()));
    }
    let mut values: Vec<f64> = region
        .iter()
        .zip(model.terminal_flags())
        .map(|(&r, &t)| if r || t { 0.0 } else { f64::NEG_INFINITY })
        .collect();
    // Q-values closer than this count as tied; well above evaluation error.
    let tie = config.tolerance * 100.0;
    for improvements in 0..=config.max_improvements {
        evaluate_policy(model, &region, &policy, &mut values, config)?;
        let mut changed = false;
        for s in (0..model.num_states()).filter(|&s| region[s]) {
            let q: Vec<f64> = (0..model.num_actions())
                .map(|a| q_value(model, &values, s, a))
                .collect();
            let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let current = policy.0[s];
            policy.0[s] = q
                .iter()
                .position(|&x| x >= best - tie)
                .expect("non-empty action set");
            changed |= policy.0[s] != current;
        }
        if !changed {
            return Ok(PolicyIterationResult {
                policy,
                values,
                improvements,
            });
        }
    }
    Err(Error::TooManyImprovements(config.max_improvements))
}

/// Plans exactly on the environment's (induced) transition table.
#[derive(Clone, Copy, Debug, Default)]
pub struct PolicyIterationImprover {
    pub config: PolicyIterationConfig,
}

impl<E> PolicyImprover<E> for PolicyIterationImprover
where
    E: Env<State = usize, Action = usize> + TabularModelSource,
{
    type Policy = TabularPolicy;

    fn improve(&self, env: &E, _current: &TabularPolicy, _seed: u64) -> Result<TabularPolicy> {
        Ok(policy_iteration(&env.tabular_model(), &self.config)?.policy)
    }
}
