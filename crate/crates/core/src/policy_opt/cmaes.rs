use std::marker::PhantomData;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PolicyImprover;
use crate::mdp::{
    rollout, ActionVec, ContinuousEnv, LinearPolicy, ParametricPolicy, Policy, StateVec,
};
use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaesConfig {
    /// λ, candidates per generation.
    pub population: usize,
    /// θ_0. Empty means "use the policy being improved".
    pub initial_mean: Vec<f64>,
    pub initial_step: f64,
    pub max_generations: usize,
    /// Rollouts averaged per candidate when optimizing a policy.
    pub rollouts_per_candidate: usize,
    /// Stop once `σ · sqrt(max eigenvalue of C)` falls below this.
    pub tol_x: f64,
    pub seed: u64,
}

impl Default for CmaesConfig {
    fn default() -> Self {
        Self {
            population: 16,
            initial_mean: Vec::new(),
            initial_step: 0.5,
            max_generations: 100,
            rollouts_per_candidate: 3,
            tol_x: 1e-12,
            seed: 0,
        }
    }
}

impl CmaesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::config("cmaes.population", "must be at least 4"));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::config("cmaes.initial_step", "must be positive"));
        }
        if self.max_generations == 0 {
            return Err(Error::config("cmaes.max_generations", "must be at least 1"));
        }
        if self.rollouts_per_candidate == 0 {
            return Err(Error::config(
                "cmaes.rollouts_per_candidate",
                "must be at least 1",
            ));
        }
        if self.initial_mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("cmaes.initial_mean", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    /// Candidate indices sorted from best to worst.
    pub ranking: Vec<usize>,
    pub best_value: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug)]
pub struct CmaesResult {
    /// Best-evaluated candidate over the whole run.
    pub best: Vec<f64>,
    pub best_value: f64,
    pub mean: Vec<f64>,
    pub history: Vec<Generation>,
}

/// Maximizes `objective(θ, generation_seed)` with (μ/μ_w, λ) CMA-ES.
///
/// All candidates of a generation receive the same seed, so noisy objectives
/// compare candidates under common random numbers. Non-finite values rank
/// last; a generation in which every candidate is non-finite is an error.
pub fn cmaes_optimize<F>(objective: F, config: &CmaesConfig) -> Result<CmaesResult>
where
    F: Fn(&[f64], u64) -> f64 + Sync,
{
    config.validate()?;
    let n = config.initial_mean.len();
    if n == 0 {
        return Err(Error::config("cmaes.initial_mean", "must not be empty"));
    }
    let nf = n as f64;
    let lambda = config.population;
    let mu = lambda / 2;
    let raw: Vec<f64> = (1..=mu)
        .map(|i| ((mu as f64) + 0.5).ln() - (i as f64).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut mean = DVector::from_column_slice(&config.initial_mean);
    let mut sigma = config.initial_step;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);
    let mut rng = rng::stream(config.seed, 0);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut history = Vec::with_capacity(config.max_generations);

    for generation in 0..config.max_generations {
        let eig = SymmetricEigen::new(cov.clone());
        let d: DVector<f64> = eig.eigenvalues.map(|x| x.max(1e-300).sqrt());
        let b = eig.eigenvectors;
        let bd = &b * DMatrix::from_diagonal(&d);

        let ys: Vec<DVector<f64>> = (0..lambda)
            .map(|_| {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                &bd * z
            })
            .collect();
        let xs: Vec<Vec<f64>> = ys
            .iter()
            .map(|y| (&mean + sigma * y).as_slice().to_vec())
            .collect();
        let gen_seed = rng::derive(config.seed, generation as u64 + 1);
        let values: Vec<f64> = xs.par_iter().map(|x| objective(x, gen_seed)).collect();
        if values.iter().all(|v| !v.is_finite()) {
            return Err(Error::AllCandidatesFailed(generation));
        }
        let score = |i: usize| {
            if values[i].is_finite() {
                values[i]
            } else {
                f64::NEG_INFINITY
            }
        };
        let mut ranking: Vec<usize> = (0..lambda).collect();
        ranking.sort_by(|&i, &j| score(j).total_cmp(&score(i)));

        let top = ranking[0];
        if best.as_ref().is_none_or(|(_, v)| values[top] > *v) {
            best = Some((xs[top].clone(), values[top]));
        }
        history.push(Generation {
            ranking: ranking.clone(),
            best_value: values[top],
            sigma,
        });

        let y_w: DVector<f64> = ranking[..mu]
            .iter()
            .zip(&weights)
            .fold(DVector::zeros(n), |acc, (&i, &w)| acc + w * &ys[i]);
        mean += sigma * &y_w;

        let inv_sqrt = &b * DMatrix::from_diagonal(&d.map(|x| 1.0 / x)) * b.transpose();
        p_sigma = (1.0 - c_sigma) * &p_sigma
            + (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt() * (&inv_sqrt * &y_w);
        let norm_ps = p_sigma.norm();
        let decay = 1.0 - (1.0 - c_sigma).powi(2 * (generation as i32 + 1));
        let h_sigma = if norm_ps / decay.sqrt() < (1.4 + 2.0 / (nf + 1.0)) * chi_n {
            1.0
        } else {
            0.0
        };
        p_c = (1.0 - c_c) * &p_c + h_sigma * (c_c * (2.0 - c_c) * mu_eff).sqrt() * &y_w;

        let rank_mu = ranking[..mu]
            .iter()
            .zip(&weights)
            .fold(DMatrix::zeros(n, n), |acc, (&i, &w)| {
                acc + w * &ys[i] * ys[i].transpose()
            });
        let rank_one = &p_c * p_c.transpose() + (1.0 - h_sigma) * c_c * (2.0 - c_c) * &cov;
        cov = (1.0 - c_1 - c_mu) * &cov + c_1 * rank_one + c_mu * rank_mu;
        cov = 0.5 * (&cov + cov.transpose());

        sigma *= ((c_sigma / d_sigma) * (norm_ps / chi_n - 1.0)).exp();
        let spread = sigma * d.max();
        if !sigma.is_finite() || spread < config.tol_x {
            break;
        }
    }

    let (best, best_value) = best.expect("at least one generation ran");
    Ok(CmaesResult {
        best,
        best_value,
        mean: mean.as_slice().to_vec(),
        history,
    })
}

/// CMA-ES over a parametric policy's `θ`, scoring each candidate by its mean
/// return over `rollouts_per_candidate` episodes.
#[derive(Clone, Debug)]
pub struct CmaesImprover<P = LinearPolicy> {
    pub config: CmaesConfig,
    _policy: PhantomData<fn() -> P>,
}

impl<P> CmaesImprover<P> {
    pub fn new(config: CmaesConfig) -> Self {
        Self {
            config,
            _policy: PhantomData,
        }
    }

    /// Mean return of `policy` over `rollouts` episodes seeded from `seed`;
    /// NaN if any rollout fails.
    pub fn score<E, Q>(env: &E, policy: &Q, rollouts: usize, seed: u64) -> f64
    where
        E: ContinuousEnv,
        Q: Policy<StateVec, ActionVec>,
    {
        let mut total = 0.0;
        for j in 0..rollouts as u64 {
            match rollout(env, policy, env.horizon(), &mut rng::stream(seed, j)) {
                Ok(t) => total += t.episode_return,
                Err(_) => return f64::NAN,
            }
        }
        total / rollouts as f64
    }
}

impl<E, P> PolicyImprover<E> for CmaesImprover<P>
where
    E: ContinuousEnv,
    P: ParametricPolicy + Policy<StateVec, ActionVec>,
{
    type Policy = P;

    fn improve(&self, env: &E, current: &P, seed: u64) -> Result<P> {
        let mut config = self.config.clone();
        if config.initial_mean.is_empty() {
            config.initial_mean = current.params().to_vec();
        }
        config.seed = seed;
        let rollouts = config.rollouts_per_candidate;
        let result = cmaes_optimize(
            |theta, gen_seed| Self::score(env, &current.with_params(theta), rollouts, gen_seed),
            &config,
        )?;
        Ok(current.with_params(&result.best))
    }
}
