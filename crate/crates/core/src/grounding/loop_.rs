use serde::{Deserialize, Serialize};

use super::{ActionTransformer, FallbackCounts, GroundedEnv, GroundingMode, RewardSource};
use crate::dynamics::{FitDiagnostics, ModelFamily};
use crate::mdp::{
    collect, evaluate, Env, EvalStats, Exploring, ExploringStarts, Policy, Provenance, Trajectory,
};
use crate::policy_opt::PolicyImprover;
use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundingLoopConfig {
    /// Upper bound on grounding iterations.
    pub max_iterations: usize,
    /// Stop once an iteration improves the real return by less than this
    /// fraction of the previous iteration's.
    pub min_relative_improvement: f64,
    pub real_episodes: usize,
    pub sim_episodes: usize,
    pub eval_episodes: usize,
    /// Exploration applied to the current policy when collecting real data.
    pub real_exploration: f64,
    /// Exploration applied when collecting simulator data.
    pub sim_exploration: f64,
    /// Start simulator episodes anywhere instead of the start state.
    pub sim_exploring_starts: bool,
    /// Keep data from earlier iterations when refitting.
    pub accumulate_data: bool,
    /// Episode cap for data collection; `None` uses the env's horizon.
    pub collection_horizon: Option<usize>,
    pub reward_source: RewardSource,
}

impl Default for GroundingLoopConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5,
            min_relative_improvement: 0.01,
            real_episodes: 50,
            sim_episodes: 50,
            eval_episodes: 1000,
            real_exploration: 0.1,
            sim_exploration: 1.0,
            sim_exploring_starts: true,
            accumulate_data: true,
            collection_horizon: None,
            reward_source: RewardSource::Transformed,
        }
    }
}

impl GroundingLoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::config(
                "grounding.max_iterations",
                "must be at least 1",
            ));
        }
        if !(self.min_relative_improvement >= 0.0) {
            return Err(Error::config(
                "grounding.min_relative_improvement",
                "must be non-negative",
            ));
        }
        for (field, n) in [
            ("grounding.real_episodes", self.real_episodes),
            ("grounding.sim_episodes", self.sim_episodes),
            ("grounding.eval_episodes", self.eval_episodes),
        ] {
            if n == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        for (field, x) in [
            ("grounding.real_exploration", self.real_exploration),
            ("grounding.sim_exploration", self.sim_exploration),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::config(field, "must be a finite non-negative number"));
            }
        }
        if self.collection_horizon == Some(0) {
            return Err(Error::config(
                "grounding.collection_horizon",
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct IterationRecord<P> {
    /// 1-based.
    pub iteration: usize,
    pub policy: P,
    pub real: EvalStats,
    pub forward: FitDiagnostics,
    pub inverse: FitDiagnostics,
    /// Fallbacks hit while improving the policy in the grounded simulator.
    pub fallbacks: FallbackCounts,
    pub real_transitions: usize,
    pub sim_transitions: usize,
    /// Set when improvement failed and the previous policy was kept.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    MaxIterations,
    Converged,
    /// Policy improvement failed; the best earlier policy is kept.
    ImprovementFailed(String),
}

#[derive(Clone, Debug)]
pub struct GroundingOutcome<P> {
    pub iterations: Vec<IterationRecord<P>>,
    /// Index into `iterations` of the policy with the best real return.
    pub best: usize,
    pub stop: StopReason,
}

impl<P> GroundingOutcome<P> {
    pub fn best_policy(&self) -> &P {
        &self.iterations[self.best].policy
    }

    pub fn best_record(&self) -> &IterationRecord<P> {
        &self.iterations[self.best]
    }
}

const TAG_REAL: u64 = 1;
const TAG_SIM: u64 = 2;
const TAG_MODELS: u64 = 3;
const TAG_EVAL: u64 = 4;

fn tagged(seed: u64, iteration: usize, tag: u64) -> u64 {
    rng::derive(seed, ((iteration as u64) << 8) | tag)
}

/// Result of fitting both models and improving the policy once.
pub struct GroundingStep<E: Env, F, I, P> {
    pub env: GroundedEnv<E, F, I>,
    pub policy: P,
    pub forward: FitDiagnostics,
    pub inverse: FitDiagnostics,
}

/// Fits the forward model on `real_data` and the inverse model on `sim_data`
/// and wraps `sim` with the resulting transformer.
#[allow(clippy::type_complexity)]
pub fn fit_grounded<Sim, Fam>(
    mode: GroundingMode,
    sim: &Sim,
    family: &Fam,
    real_data: &[Trajectory<Sim::State, Sim::Action>],
    sim_data: &[Trajectory<Sim::State, Sim::Action>],
    reward_source: RewardSource,
    seed: u64,
) -> Result<(
    GroundedEnv<Sim, Fam::Forward, Fam::Inverse>,
    FitDiagnostics,
    FitDiagnostics,
)>
where
    Sim: Env + Clone,
    Fam: ModelFamily<Sim::State, Sim::Action>,
{
    let (forward, forward_diag) = family.fit_forward(real_data, mode, rng::derive(seed, 1))?;
    let (inverse, inverse_diag) = family.fit_inverse(sim_data, rng::derive(seed, 2))?;
    let env = GroundedEnv::new(
        sim.clone(),
        ActionTransformer::new(forward, inverse, mode),
        reward_source,
    );
    Ok((env, forward_diag, inverse_diag))
}

/// One grounding step on given data: [`fit_grounded`], then improve `current`
/// in the grounded simulator.
#[allow(clippy::too_many_arguments)]
pub fn ground_once<Sim, Fam, Imp, P>(
    mode: GroundingMode,
    sim: &Sim,
    family: &Fam,
    improver: &Imp,
    current: &P,
    real_data: &[Trajectory<Sim::State, Sim::Action>],
    sim_data: &[Trajectory<Sim::State, Sim::Action>],
    reward_source: RewardSource,
    seed: u64,
) -> Result<GroundingStep<Sim, Fam::Forward, Fam::Inverse, P>>
where
    Sim: Env + Clone,
    Fam: ModelFamily<Sim::State, Sim::Action>,
    Imp: PolicyImprover<GroundedEnv<Sim, Fam::Forward, Fam::Inverse>, Policy = P>,
    P: Policy<Sim::State, Sim::Action> + Clone,
{
    let (env, forward, inverse) =
        fit_grounded(mode, sim, family, real_data, sim_data, reward_source, seed)?;
    let policy = improver.improve(&env, current, rng::derive(seed, 3))?;
    Ok(GroundingStep {
        env,
        policy,
        forward,
        inverse,
    })
}

/// Alternates between grounding the simulator on real data and improving the
/// policy inside it.
///
/// Each iteration collects real transitions with the current policy, fits the
/// forward model, collects simulator transitions, fits the inverse model,
/// improves the policy in the grounded simulator, and evaluates it on the real
/// environment. The loop stops after `max_iterations` or when the real return
/// stops improving.
#[allow(clippy::too_many_arguments)]
pub fn ground_and_improve<Sim, Real, Fam, Imp, P>(
    config: &GroundingLoopConfig,
    mode: GroundingMode,
    sim: &Sim,
    real: &Real,
    family: &Fam,
    improver: &Imp,
    initial: P,
    seed: u64,
) -> Result<GroundingOutcome<P>>
where
    Sim: Env + Clone,
    Real: Env<State = Sim::State, Action = Sim::Action>,
    Fam: ModelFamily<Sim::State, Sim::Action>,
    Imp: PolicyImprover<GroundedEnv<Sim, Fam::Forward, Fam::Inverse>, Policy = P>,
    P: Policy<Sim::State, Sim::Action> + Clone,
{
    config.validate()?;
    let real_horizon = config.collection_horizon.unwrap_or_else(|| real.horizon());
    let sim_horizon = config.collection_horizon.unwrap_or_else(|| sim.horizon());

    let mut real_data: Vec<Trajectory<Sim::State, Sim::Action>> = Vec::new();
    let mut sim_data: Vec<Trajectory<Sim::State, Sim::Action>> = Vec::new();
    let mut policy = initial;
    let mut records: Vec<IterationRecord<P>> = Vec::new();
    let mut stop = StopReason::MaxIterations;

    for k in 1..=config.max_iterations {
        if !config.accumulate_data {
            real_data.clear();
            sim_data.clear();
        }
        let behaviour = Exploring {
            env: real,
            policy: &policy,
            scale: config.real_exploration,
        };
        let fresh = collect(
            real,
            &behaviour,
            config.real_episodes,
            tagged(seed, k, TAG_REAL),
            real_horizon,
        )?;
        real_data.extend(fresh.into_iter().map(|t| t.with_source(Provenance::Real)));
        let sim_seed = tagged(seed, k, TAG_SIM);
        let fresh = if config.sim_exploring_starts {
            let env = ExploringStarts(sim);
            let behaviour = Exploring {
                env: &env,
                policy: &policy,
                scale: config.sim_exploration,
            };
            collect(&env, &behaviour, config.sim_episodes, sim_seed, sim_horizon)?
        } else {
            let behaviour = Exploring {
                env: sim,
                policy: &policy,
                scale: config.sim_exploration,
            };
            collect(sim, &behaviour, config.sim_episodes, sim_seed, sim_horizon)?
        };
        sim_data.extend(fresh.into_iter().map(|t| t.with_source(Provenance::Sim)));

        let models_seed = tagged(seed, k, TAG_MODELS);
        let (grounded, forward_diag, inverse_diag) = fit_grounded(
            mode,
            sim,
            family,
            &real_data,
            &sim_data,
            config.reward_source,
            models_seed,
        )?;
        let (improved, note) =
            match improver.improve(&grounded, &policy, rng::derive(models_seed, 3)) {
                Ok(p) => (p, None),
                Err(e) => {
                    log::warn!(
                        "{} iteration {k}: policy improvement failed: {e}",
                        mode.name()
                    );
                    stop = StopReason::ImprovementFailed(e.to_string());
                    if !records.is_empty() {
                        break;
                    }
                    // Nothing to fall back on yet: keep the current policy.
                    (policy.clone(), Some(e.to_string()))
                }
            };
        let fallbacks = grounded.transformer.fallbacks();
        let stats = evaluate(
            real,
            &improved,
            config.eval_episodes,
            tagged(seed, k, TAG_EVAL),
        )?;
        log::info!(
            "{} iteration {k}: real return {:.4} ± {:.4}",
            mode.name(),
            stats.mean_return,
            stats.std_error
        );
        let previous = records.last().map(|r| r.real.mean_return);
        records.push(IterationRecord {
            iteration: k,
            policy: improved.clone(),
            real: stats,
            forward: forward_diag,
            inverse: inverse_diag,
            fallbacks,
            real_transitions: real_data.iter().map(|t| t.len()).sum(),
            sim_transitions: sim_data.iter().map(|t| t.len()).sum(),
            note,
        });
        if stop != StopReason::MaxIterations {
            break;
        }
        policy = improved;
        if let Some(prev) = previous {
            let gain = (stats.mean_return - prev) / prev.abs().max(f64::MIN_POSITIVE);
            if gain < config.min_relative_improvement {
                stop = StopReason::Converged;
                break;
            }
        }
    }

    let best = records.iter().enumerate().fold(0, |best, (i, r)| {
        if r.real.mean_return > records[best].real.mean_return {
            i
        } else {
            best
        }
    });
    Ok(GroundingOutcome {
        iterations: records,
        best,
        stop,
    })
}
