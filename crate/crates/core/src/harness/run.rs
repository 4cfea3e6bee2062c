use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig, ExperimentKind};
use crate::baselines::ane_grid_search;
use crate::dynamics::{NeuralFamily, TabularFamily};
use crate::envs::{toy, CartPole, CartPoleParams, CliffWorld, CliffWorldParams, ToyMdp};
use crate::grounding::{ground_and_improve, ground_once, GroundingMode, GroundingOutcome};
use crate::mdp::{
    evaluate, ContinuousEnv, DiscreteEnv, EvalStats, LinearPolicy, Provenance, TabularModelSource,
    TabularPolicy,
};
use crate::policy_opt::{policy_iteration, CmaesImprover, PolicyImprover, PolicyIterationImprover};
use crate::rng;
use crate::Result;

/// One final evaluation per (algorithm, noise, trial).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub algorithm: String,
    pub noise: f64,
    pub trial_seed: u64,
    /// Grounding iteration that produced the evaluated policy; 0 when the
    /// algorithm does not ground.
    pub grounding_iteration: usize,
    pub mean_return: f64,
    pub std_error: f64,
    pub failure_rate: f64,
    pub wall_clock_s: f64,
}

/// Per grounding iteration or per ANE candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub experiment: String,
    pub algorithm: String,
    pub noise: f64,
    pub trial_seed: u64,
    /// `grounding` or `ane`.
    pub stage: String,
    /// Grounding iteration (1-based) or candidate position (0-based).
    pub index: usize,
    pub ane_sigma: Option<f64>,
    pub real_mean_return: f64,
    pub real_std_error: f64,
    pub forward_loss: Option<f64>,
    pub inverse_loss: Option<f64>,
    pub real_transitions: Option<usize>,
    pub sim_transitions: Option<usize>,
    pub forward_unseen: Option<u64>,
    pub inverse_unreachable: Option<u64>,
    /// This entry produced the reported policy.
    pub selected: bool,
    /// Why the entry is unusual, e.g. a failed improvement step.
    pub note: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub diagnostics: Vec<DiagnosticRow>,
}

struct Job {
    algorithm: Algorithm,
    noise_index: usize,
    noise: f64,
    trial: usize,
    trial_seed: u64,
}

impl Job {
    /// Shared by every algorithm at this (trial, noise) point so comparisons
    /// use common random numbers.
    fn train_seed(&self) -> u64 {
        rng::derive(self.trial_seed, 0x100 + self.noise_index as u64)
    }

    fn eval_seed(&self) -> u64 {
        rng::derive(self.trial_seed, 0x200 + self.noise_index as u64)
    }
}

struct JobOutcome {
    iteration: usize,
    real: EvalStats,
    diagnostics: Vec<DiagnosticRow>,
}

/// Runs every (trial, noise, algorithm) combination. Rows come back ordered by
/// trial, then noise, then algorithm as listed in the config, and everything
/// but the wall-clock column is a function of the config alone.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let noise: Vec<f64> = match config.experiment {
        ExperimentKind::Toy => vec![toy::LUCKY_BRANCH],
        _ => config.noise.clone(),
    };
    let mut jobs = Vec::new();
    for trial in 0..config.trials {
        for (noise_index, &x) in noise.iter().enumerate() {
            for &algorithm in &config.algorithms {
                jobs.push(Job {
                    algorithm,
                    noise_index,
                    noise: x,
                    trial,
                    trial_seed: config.seed.wrapping_add(trial as u64),
                });
            }
        }
    }

    let sim_policies = if config.experiment.is_continuous() {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| cartpole_sim_policy(config, config.seed.wrapping_add(trial as u64)))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let results = jobs
        .par_iter()
        .map(|job| {
            let started = Instant::now();
            let out = match config.experiment {
                ExperimentKind::Toy => toy_job(config, job),
                ExperimentKind::CliffSweep => cliff_job(config, job),
                _ => cartpole_job(config, job, &sim_policies[job.trial]),
            }?;
            log::info!(
                "{} {} noise={} seed={}: {:.4} ± {:.4}",
                config.experiment.name(),
                job.algorithm.name(),
                job.noise,
                job.trial_seed,
                out.real.mean_return,
                out.real.std_error
            );
            Ok((job, out, started.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut output = ExperimentOutput::default();
    for (job, out, seconds) in results {
        output.rows.push(ResultRow {
            experiment: config.experiment.name().into(),
            algorithm: job.algorithm.name().into(),
            noise: job.noise,
            trial_seed: job.trial_seed,
            grounding_iteration: out.iteration,
            mean_return: out.real.mean_return,
            std_error: out.real.std_error,
            failure_rate: out.real.failure_rate,
            wall_clock_s: seconds,
        });
        output
            .diagnostics
            .extend(out.diagnostics.into_iter().map(|mut d| {
                d.experiment = config.experiment.name().into();
                d.algorithm = job.algorithm.name().into();
                d.noise = job.noise;
                d.trial_seed = job.trial_seed;
                d
            }));
    }
    Ok(output)
}

fn mode(algorithm: Algorithm) -> GroundingMode {
    match algorithm {
        Algorithm::Sgat => GroundingMode::Sgat,
        _ => GroundingMode::Gat,
    }
}

fn blank_diagnostic(stage: &str, index: usize, real: &EvalStats) -> DiagnosticRow {
    DiagnosticRow {
        experiment: String::new(),
        algorithm: String::new(),
        noise: 0.0,
        trial_seed: 0,
        stage: stage.into(),
        index,
        ane_sigma: None,
        real_mean_return: real.mean_return,
        real_std_error: real.std_error,
        forward_loss: None,
        inverse_loss: None,
        real_transitions: None,
        sim_transitions: None,
        forward_unseen: None,
        inverse_unreachable: None,
        selected: false,
        note: String::new(),
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn grounding_diagnostics<P>(outcome: &GroundingOutcome<P>) -> Vec<DiagnosticRow> {
    outcome
        .iterations
        .iter()
        .enumerate()
        .map(|(i, r)| DiagnosticRow {
            forward_loss: finite(r.forward.loss),
            inverse_loss: finite(r.inverse.loss),
            real_transitions: Some(r.real_transitions),
            sim_transitions: Some(r.sim_transitions),
            forward_unseen: Some(r.fallbacks.forward_unseen),
            inverse_unreachable: Some(r.fallbacks.inverse_unreachable),
            selected: i == outcome.best,
            note: r.note.clone().unwrap_or_default(),
            ..blank_diagnostic("grounding", r.iteration, &r.real)
        })
        .collect()
}

fn toy_job(config: &ExperimentConfig, job: &Job) -> Result<JobOutcome> {
    let sim = ToyMdp::SimDeterministic3Action.model();
    let real = ToyMdp::RealStochastic3Action.model();
    let initial = policy_iteration(&sim, &config.policy_iteration)?.policy;
    let (policy, iteration, diagnostics) = match job.algorithm {
        Algorithm::None => (initial, 0, Vec::new()),
        algorithm => {
            let real_data = labelled(
                real.exhaustive_data(config.toy_resolution),
                Provenance::Real,
            );
            let sim_data = labelled(sim.exhaustive_data(config.toy_resolution), Provenance::Sim);
            let family = TabularFamily {
                num_states: sim.num_states(),
                num_actions: sim.num_actions(),
            };
            let improver = PolicyIterationImprover {
                config: config.policy_iteration,
            };
            let step = ground_once(
                mode(algorithm),
                &sim,
                &family,
                &improver,
                &initial,
                &real_data,
                &sim_data,
                config.grounding.reward_source,
                job.train_seed(),
            )?;
            let fallbacks = step.env.transformer.fallbacks();
            let real_stats = evaluate(
                &real,
                &step.policy,
                config.grounding.eval_episodes,
                job.train_seed(),
            )?;
            let diag = DiagnosticRow {
                real_transitions: Some(real_data.len()),
                sim_transitions: Some(sim_data.len()),
                forward_unseen: Some(fallbacks.forward_unseen),
                inverse_unreachable: Some(fallbacks.inverse_unreachable),
                selected: true,
                ..blank_diagnostic("grounding", 1, &real_stats)
            };
            (step.policy, 1, vec![diag])
        }
    };
    let real_stats = evaluate(&real, &policy, config.eval_episodes, job.eval_seed())?;
    Ok(JobOutcome {
        iteration,
        real: real_stats,
        diagnostics,
    })
}

fn labelled<S: PartialEq, A>(
    data: Vec<crate::mdp::Trajectory<S, A>>,
    source: Provenance,
) -> Vec<crate::mdp::Trajectory<S, A>> {
    data.into_iter().map(|t| t.with_source(source)).collect()
}

fn cliff_job(config: &ExperimentConfig, job: &Job) -> Result<JobOutcome> {
    let sim = CliffWorld::new(CliffWorldParams {
        slip_prob: 0.0,
        ..config.cliff.clone()
    })?;
    let real = CliffWorld::new(CliffWorldParams {
        slip_prob: job.noise,
        ..config.cliff.clone()
    })?;
    let initial = policy_iteration(&sim.tabular_model(), &config.policy_iteration)?.policy;
    let (policy, iteration, diagnostics): (TabularPolicy, usize, Vec<DiagnosticRow>) =
        match job.algorithm {
            Algorithm::None => (initial, 0, Vec::new()),
            algorithm => {
                let family = TabularFamily {
                    num_states: sim.num_states(),
                    num_actions: sim.num_actions(),
                };
                let improver = PolicyIterationImprover {
                    config: config.policy_iteration,
                };
                let outcome = ground_and_improve(
                    &config.grounding,
                    mode(algorithm),
                    &sim,
                    &real,
                    &family,
                    &improver,
                    initial,
                    job.train_seed(),
                )?;
                let diagnostics = grounding_diagnostics(&outcome);
                let best = outcome.best_record();
                (best.policy.clone(), best.iteration, diagnostics)
            }
        };
    let real_stats = evaluate(&real, &policy, config.eval_episodes, job.eval_seed())?;
    Ok(JobOutcome {
        iteration,
        real: real_stats,
        diagnostics,
    })
}

fn cartpole_envs(config: &ExperimentConfig, noise: f64) -> Result<(CartPole, CartPole)> {
    let sim = CartPole::new(CartPoleParams {
        pole_mass_factor: 1.0,
        action_noise_std: 0.0,
        ..config.cartpole.clone()
    })?;
    let real = CartPole::new(CartPoleParams {
        action_noise_std: noise,
        ..config.cartpole.clone()
    })?;
    Ok((sim, real))
}

/// `θ_0`: CMA-ES on the raw simulator from the zero policy. Also the
/// no-grounding baseline.
pub fn cartpole_sim_policy(config: &ExperimentConfig, trial_seed: u64) -> Result<LinearPolicy> {
    let (sim, _) = cartpole_envs(config, 0.0)?;
    let improver = CmaesImprover::<LinearPolicy>::new(config.cmaes.clone());
    improver.improve(
        &sim,
        &LinearPolicy::for_env(&sim),
        rng::derive(trial_seed, 0x300),
    )
}

fn cartpole_job(
    config: &ExperimentConfig,
    job: &Job,
    initial: &LinearPolicy,
) -> Result<JobOutcome> {
    let (sim, real) = cartpole_envs(config, job.noise)?;
    let improver = CmaesImprover::<LinearPolicy>::new(config.cmaes.clone());
    let (policy, iteration, diagnostics) = match job.algorithm {
        Algorithm::None => (initial.clone(), 0, Vec::new()),
        Algorithm::Ane => {
            let search = ane_grid_search(
                &config.ane.sigmas,
                &sim,
                &improver,
                initial,
                &real,
                config.ane.eval_episodes,
                job.train_seed(),
            )?;
            let diagnostics = search
                .candidates
                .iter()
                .enumerate()
                .map(|(i, c)| DiagnosticRow {
                    ane_sigma: Some(c.sigma),
                    selected: i == search.best,
                    ..blank_diagnostic("ane", i, &c.real)
                })
                .collect();
            (search.best().policy.clone(), 0, diagnostics)
        }
        algorithm => {
            let family = NeuralFamily {
                train: config.neural.clone(),
                encoding: config.inverse_encoding,
                action_bounds: sim.action_bounds().to_vec(),
            };
            let outcome = ground_and_improve(
                &config.grounding,
                mode(algorithm),
                &sim,
                &real,
                &family,
                &improver,
                initial.clone(),
                job.train_seed(),
            )?;
            let diagnostics = grounding_diagnostics(&outcome);
            let best = outcome.best_record();
            (best.policy.clone(), best.iteration, diagnostics)
        }
    };
    let real_stats = evaluate(&real, &policy, config.eval_episodes, job.eval_seed())?;
    Ok(JobOutcome {
        iteration,
        real: real_stats,
        diagnostics,
    })
}

/// Serializes rows with a header line.
pub fn write_csv<T: Serialize>(writer: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes results and diagnostics to the config's paths, creating parent
/// directories. Returns both paths.
pub fn write_outputs(
    config: &ExperimentConfig,
    output: &ExperimentOutput,
) -> Result<(PathBuf, PathBuf)> {
    let results = config.output_path();
    let diagnostics = config.diagnostics_path();
    for path in [&results, &diagnostics] {
        create_parent(path)?;
    }
    write_csv(File::create(&results)?, &output.rows)?;
    write_csv(File::create(&diagnostics)?, &output.diagnostics)?;
    Ok((results, diagnostics))
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}
