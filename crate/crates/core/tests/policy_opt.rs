use proptest::prelude::*;
use rand::Rng;

use sgat::envs::{CliffWorld, CliffWorldParams};
use sgat::mdp::{TabularMdpModel, TabularModelSource};
use sgat::policy_opt::{cmaes_optimize, policy_iteration, CmaesConfig, PolicyIterationConfig};
use sgat::rng;

const TERMINAL: usize = 9;

/// Ten states, three actions, state 9 terminal. Every action reaches the
/// terminal with probability at least 0.1, so every policy is proper.
fn random_mdp(seed: u64) -> TabularMdpModel {
    let mut r = rng::stream(seed, 0);
    let rewards: Vec<f64> = (0..3 * 10).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut m = TabularMdpModel::new(10, 3, 0, 1000, |a, s| rewards[a * 10 + s]);
    m.set_terminal(TERMINAL, false);
    for s in 0..TERMINAL {
        for a in 0..3 {
            let weights: Vec<f64> = (0..10).map(|_| r.random_range(0.0..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let stop = 0.1 + 0.4 * r.random_range(0.0..1.0);
            for (next, w) in weights.iter().enumerate() {
                let p = (1.0 - stop) * w / total + if next == TERMINAL { stop } else { 0.0 };
                m.add(s, a, next, p);
            }
        }
    }
    m
}

/// Dense value iteration to machine precision.
fn value_iteration(m: &TabularMdpModel) -> Vec<f64> {
    let n = m.num_states();
    let mut v = vec![0.0; n];
    loop {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if m.is_terminal(s) {
                continue;
            }
            let best = (0..m.num_actions())
                .map(|a| {
                    (0..n)
                        .map(|t| m.probability(s, a, t) * (m.reward(a, t) + v[t]))
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < 1e-14 {
            return v;
        }
    }
}

#[test]
fn policy_iteration_matches_value_iteration_on_random_mdps() {
    for seed in 0..20 {
        let m = random_mdp(seed);
        let oracle = value_iteration(&m);
        let r = policy_iteration(&m, &PolicyIterationConfig::default()).unwrap();
        for s in 0..TERMINAL {
            assert!(
                (r.values[s] - oracle[s]).abs() < 1e-6,
                "seed {seed} state {s}: {} vs {}",
                r.values[s],
                oracle[s]
            );
            // The chosen action is greedy under the oracle's values.
            let q = |a: usize| {
                (0..10)
                    .map(|t| m.probability(s, a, t) * (m.reward(a, t) + oracle[t]))
                    .sum::<f64>()
            };
            assert!(
                (q(r.policy.0[s]) - oracle[s]).abs() < 1e-6,
                "seed {seed} state {s}"
            );
        }
    }
}

#[test]
fn cliff_improvement_count_is_bounded() {
    for slip in [0.0, 0.3, 0.6, 0.9] {
        let world = CliffWorld::new(CliffWorldParams::with_slip(slip)).unwrap();
        let r =
            policy_iteration(&world.tabular_model(), &PolicyIterationConfig::default()).unwrap();
        assert!(
            r.improvements <= 100,
            "slip {slip}: {} improvements",
            r.improvements
        );
        let oracle = value_iteration(&world.tabular_model());
        assert!(
            (r.values[world.start()] - oracle[world.start()]).abs() < 1e-6,
            "slip {slip}"
        );
    }
}

#[test]
fn too_few_improvements_is_an_error() {
    let world = CliffWorld::new(CliffWorldParams::with_slip(0.0)).unwrap();
    let config = PolicyIterationConfig {
        max_improvements: 1,
        ..Default::default()
    };
    assert!(policy_iteration(&world.tabular_model(), &config).is_err());
}

fn rosenbrock(x: &[f64]) -> f64 {
    -x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum::<f64>()
}

fn cmaes(initial: Vec<f64>, generations: usize) -> CmaesConfig {
    CmaesConfig {
        population: 12,
        initial_mean: initial,
        initial_step: 0.5,
        max_generations: generations,
        seed: 3,
        ..Default::default()
    }
}

#[test]
fn cmaes_ranking_is_invariant_to_affine_rescaling() {
    let config = cmaes(vec![-1.0, 1.5, 0.0, 0.5], 60);
    let a = cmaes_optimize(|x, _| rosenbrock(x), &config).unwrap();
    let b = cmaes_optimize(|x, _| 2.0 * rosenbrock(x) + 5.0, &config).unwrap();
    assert_eq!(a.history.len(), b.history.len());
    for (ga, gb) in a.history.iter().zip(&b.history) {
        assert_eq!(ga.ranking, gb.ranking);
        assert_eq!(ga.sigma, gb.sigma);
    }
    assert_eq!(a.best, b.best);
    assert_eq!(a.mean, b.mean);
}

#[test]
fn cmaes_solves_a_rotated_ellipsoid() {
    // f(x) = -sum_i 10^(2i/(n-1)) (R x)_i^2 with a fixed rotation R.
    let n = 4;
    let angle: f64 = 0.7;
    let (c, s) = (angle.cos(), angle.sin());
    let rotate = |x: &[f64]| {
        vec![
            c * x[0] - s * x[1],
            s * x[0] + c * x[1],
            c * x[2] + s * x[3],
            -s * x[2] + c * x[3],
        ]
    };
    let f = |x: &[f64], _| {
        let y = rotate(x);
        -(0..n)
            .map(|i| 10f64.powf(2.0 * i as f64 / (n - 1) as f64) * y[i] * y[i])
            .sum::<f64>()
    };
    let r = cmaes_optimize(f, &cmaes(vec![1.0; n], 300)).unwrap();
    assert!(r.best_value > -1e-8, "{}", r.best_value);
}

#[test]
fn cmaes_is_deterministic_for_a_seed() {
    let config = cmaes(vec![0.3, -0.3], 20);
    let noisy = |x: &[f64], seed: u64| {
        let mut r = rng::stream(seed, 0);
        -(x[0] * x[0] + x[1] * x[1]) + 0.01 * r.random_range(-1.0..1.0)
    };
    let a = cmaes_optimize(noisy, &config).unwrap();
    let b = cmaes_optimize(noisy, &config).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.history, b.history);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Only the order of objective values matters.
    #[test]
    fn cmaes_ignores_monotone_transforms(scale in 0.01f64..100.0, shift in -100.0f64..100.0, seed in 0u64..1000) {
        let mut config = cmaes(vec![0.5, -0.5, 1.0], 15);
        config.seed = seed;
        let sphere = |x: &[f64]| -x.iter().map(|v| (v - 0.2).powi(2)).sum::<f64>();
        let a = cmaes_optimize(|x, _| sphere(x), &config).unwrap();
        let b = cmaes_optimize(|x, _| scale * sphere(x) + shift, &config).unwrap();
        let c = cmaes_optimize(|x, _| -(-sphere(x)).sqrt(), &config).unwrap();
        prop_assert_eq!(&a.best, &b.best);
        prop_assert_eq!(&a.best, &c.best);
        for (ga, gb) in a.history.iter().zip(&b.history) {
            prop_assert_eq!(&ga.ranking, &gb.ranking);
        }
    }
}
