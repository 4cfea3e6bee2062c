use sgat::baselines::{ane_grid_search, ane_wrap, AneConfig, AneEnv};
use sgat::envs::{CartPole, CartPoleParams};
use sgat::mdp::{rollout, ActionVec, ContinuousEnv, LinearPolicy, ParametricPolicy, StateVec};
use sgat::policy_opt::PolicyImprover;
use sgat::rng;

fn cartpole() -> CartPole {
    CartPole::new(CartPoleParams::sim()).unwrap()
}

/// A policy that pushes right harder the larger θ is, so every cart-pole
/// episode is short and informative.
fn leaning_policy(env: &CartPole) -> LinearPolicy {
    LinearPolicy::for_env(env).with_params(&[0.1, 0.3, 2.0, 0.4, 0.05])
}

/// Std of clamp(N(0, σ²), -1, 1) by Simpson integration of the density.
fn clamped_gaussian_std(sigma: f64) -> f64 {
    let density = |x: f64| {
        (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    };
    let n = 20_000;
    let h = 2.0 / n as f64;
    let (mut mass, mut second) = (0.0, 0.0);
    for i in 0..=n {
        let x = -1.0 + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        mass += w * density(x);
        second += w * x * x * density(x);
    }
    mass *= h / 3.0;
    second *= h / 3.0;
    // The tails are piled up on ±1, each contributing 1 to E[X²].
    (second + (1.0 - mass)).sqrt()
}

#[test]
fn oracle_agrees_with_reference_value() {
    assert!((clamped_gaussian_std(0.5) - 0.479_723_077_836_662_74).abs() < 1e-9);
}

#[test]
fn zero_sigma_is_the_identity() {
    let base = cartpole();
    let wrapped = ane_wrap(base.clone(), AneConfig { sigma: 0.0 }).unwrap();
    let policy = leaning_policy(&base);
    for seed in 0..10 {
        let a = rollout(&base, &policy, 200, &mut rng::stream(seed, 0)).unwrap();
        let b = rollout(&wrapped, &policy, 200, &mut rng::stream(seed, 0)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn executed_action_spread_matches_the_clamped_gaussian() {
    let env = ane_wrap(cartpole(), AneConfig { sigma: 0.5 }).unwrap();
    let mut r = rng::stream(11, 0);
    let n = 200_000;
    let samples: Vec<f64> = (0..n)
        .map(|_| env.perturb(&ActionVec(vec![0.0]), &mut r).0[0])
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let expected = clamped_gaussian_std(0.5);
    // Standard error of a sample std is about std / sqrt(2n).
    let se = expected / (2.0 * n as f64).sqrt();
    assert!((std - expected).abs() < 5.0 * se, "{std} vs {expected}");
    assert!(samples.iter().all(|x| (-1.0..=1.0).contains(x)));
}

#[test]
fn perturbed_actions_are_clamped_at_the_bound() {
    let env = ane_wrap(cartpole(), AneConfig { sigma: 0.1 }).unwrap();
    let mut r = rng::stream(12, 0);
    let n = 100_000;
    let executed: Vec<f64> = (0..n)
        .map(|_| env.perturb(&ActionVec(vec![0.95]), &mut r).0[0])
        .collect();
    assert!(executed.iter().all(|x| (-1.0..=1.0).contains(x)));
    // P(N(0, 0.01) > 0.05) = 1 - Φ(0.5) ≈ 0.3085.
    let at_bound = executed.iter().filter(|&&x| x == 1.0).count() as f64 / n as f64;
    let se = (0.3085 * 0.6915 / n as f64).sqrt();
    assert!((at_bound - 0.3085).abs() < 5.0 * se, "{at_bound}");
}

#[test]
fn negative_sigma_is_rejected() {
    assert!(ane_wrap(cartpole(), AneConfig { sigma: -0.1 }).is_err());
    assert!(ane_wrap(cartpole(), AneConfig { sigma: f64::NAN }).is_err());
}

/// Returns the current policy unchanged.
struct Keep;

impl PolicyImprover<AneEnv<CartPole>> for Keep {
    type Policy = LinearPolicy;
    fn improve(
        &self,
        _env: &AneEnv<CartPole>,
        current: &LinearPolicy,
        _seed: u64,
    ) -> sgat::Result<LinearPolicy> {
        Ok(current.clone())
    }
}

/// Sets the angle gain from the σ it trains under, so candidates differ.
struct GainFromSigma;

impl PolicyImprover<AneEnv<CartPole>> for GainFromSigma {
    type Policy = LinearPolicy;
    fn improve(
        &self,
        env: &AneEnv<CartPole>,
        current: &LinearPolicy,
        _seed: u64,
    ) -> sgat::Result<LinearPolicy> {
        Ok(current.with_params(&[0.0, 0.0, 10.0 * env.sigma(), 0.0, 0.0]))
    }
}

#[test]
fn grid_search_with_one_candidate() {
    let sim = cartpole();
    let real = CartPole::new(CartPoleParams::real(10.0, 0.0)).unwrap();
    let search = ane_grid_search(&[0.3], &sim, &Keep, &leaning_policy(&sim), &real, 20, 5).unwrap();
    assert_eq!(search.candidates.len(), 1);
    assert_eq!(search.best, 0);
    assert_eq!(search.best().sigma, 0.3);
}

#[test]
fn grid_search_requires_candidates() {
    let sim = cartpole();
    let real = cartpole();
    assert!(ane_grid_search(&[], &sim, &Keep, &leaning_policy(&sim), &real, 20, 5).is_err());
}

#[test]
fn grid_search_keeps_the_best_real_return() {
    let sim = cartpole();
    let real = CartPole::new(CartPoleParams::real(10.0, 0.2)).unwrap();
    let sigmas = [0.0, 0.05, 0.2, 0.6, 1.0];
    let initial = LinearPolicy::for_env(&sim);
    let search = ane_grid_search(&sigmas, &sim, &GainFromSigma, &initial, &real, 30, 9).unwrap();
    let got: Vec<f64> = search.candidates.iter().map(|c| c.sigma).collect();
    assert_eq!(got, sigmas);
    let best_return = search
        .candidates
        .iter()
        .map(|c| c.real.mean_return)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(search.best().real.mean_return, best_return);
    let first_best = search
        .candidates
        .iter()
        .position(|c| c.real.mean_return == best_return)
        .unwrap();
    assert_eq!(search.best, first_best);
    // Different gains really were tried.
    let distinct = search
        .candidates
        .iter()
        .map(|c| c.real.mean_return.to_bits())
        .collect::<std::collections::HashSet<_>>();
    assert!(distinct.len() > 1);
}

#[test]
fn grid_search_ties_go_to_the_smaller_sigma() {
    let sim = cartpole();
    let real = CartPole::new(CartPoleParams::real(10.0, 0.2)).unwrap();
    let search = ane_grid_search(
        &[0.6, 0.1, 0.3],
        &sim,
        &Keep,
        &leaning_policy(&sim),
        &real,
        20,
        1,
    )
    .unwrap();
    assert_eq!(search.best().sigma, 0.1);
}

#[test]
fn wrapped_env_keeps_the_interface() {
    let env = ane_wrap(cartpole(), AneConfig::default()).unwrap();
    assert_eq!(env.state_dim(), 4);
    assert_eq!(env.action_bounds(), cartpole().action_bounds());
    let s: StateVec = sgat::mdp::Env::reset(&env, &mut rng::stream(0, 0));
    assert_eq!(s.0.len(), 4);
}
