use proptest::prelude::*;

use sgat::envs::{CartPole, CartPoleParams, CliffWorld, CliffWorldParams};
use sgat::mdp::{ActionVec, Env, StateVec};
use sgat::rng;

/// Upper 0.001 quantiles of the χ² distribution for 1..=4 degrees of freedom.
const CHI2_999: [f64; 4] = [
    10.827566170662733,
    13.815510557964274,
    16.26623619623813,
    18.46682695290317,
];

fn chi_square(world: &CliffWorld, cell: usize, action: usize, n: usize, seed: u64) -> (f64, usize) {
    let exact = world.exact_transition_matrix();
    let outcomes = exact.outcomes(cell, action);
    let mut counts = vec![0usize; outcomes.len()];
    let mut r = rng::stream(seed, 0);
    for _ in 0..n {
        let next = world.cliff_step(cell, action, &mut r).unwrap().next;
        let i = outcomes
            .iter()
            .position(|o| o.next == next)
            .expect("sampled an impossible successor");
        counts[i] += 1;
    }
    let stat = outcomes
        .iter()
        .zip(&counts)
        .map(|(o, &c)| {
            let e = o.prob * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    (stat, outcomes.len() - 1)
}

#[test]
fn cliff_sampling_fits_the_exact_kernel() {
    let cases = [
        (0.5, (1, 5), 0),  // interior, four successors
        (0.2, (2, 3), 3),  // interior
        (0.7, (0, 0), 0),  // corner: two wall bumps merge
        (0.9, (3, 0), 3),  // start cell, cliff to the right
        (1.0, (1, 11), 2), // right wall
    ];
    for (k, &(slip, (row, col), action)) in cases.iter().enumerate() {
        let world = CliffWorld::new(CliffWorldParams::with_slip(slip)).unwrap();
        let cell = world.cell(row, col);
        let (stat, df) = chi_square(&world, cell, action, 100_000, k as u64);
        assert!(df >= 1);
        assert!(
            stat < CHI2_999[df - 1],
            "slip {slip} cell {cell}: χ² = {stat} with {df} dof"
        );
    }
}

#[test]
fn full_slip_rows_are_uniform_mixtures() {
    let world = CliffWorld::new(CliffWorldParams::with_slip(1.0)).unwrap();
    let exact = world.exact_transition_matrix();
    for s in (0..48).filter(|&s| !world.is_terminal(s)) {
        let first = exact.row(s, 0);
        for a in 1..4 {
            assert_eq!(exact.row(s, a), first);
        }
        let mut mix = vec![0.0; 48];
        for d in 0..4 {
            mix[world.moved(s, d)] += 0.25;
        }
        assert_eq!(first, mix);
    }
}

#[test]
fn no_slip_rows_are_one_hot() {
    let world = CliffWorld::new(CliffWorldParams::with_slip(0.0)).unwrap();
    assert!(world.exact_transition_matrix().is_deterministic());
}

proptest! {
    #[test]
    fn cliff_rows_sum_to_one(slip in 0.0f64..=1.0) {
        let world = CliffWorld::new(CliffWorldParams::with_slip(slip)).unwrap();
        prop_assert!(world.exact_transition_matrix().validate().is_ok());
    }

    #[test]
    fn cartpole_is_deterministic_without_noise(
        state in prop::collection::vec(-0.1f64..0.1, 4),
        action in -1.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let env = CartPole::new(CartPoleParams::real(10.0, 0.0)).unwrap();
        let s = StateVec(state);
        let a = ActionVec(vec![action]);
        let x = env.step(&s, &a, &mut rng::stream(seed, 0)).unwrap();
        let y = env.step(&s, &a, &mut rng::stream(seed.wrapping_add(1), 0)).unwrap();
        prop_assert_eq!(x, y);
    }
}

#[test]
fn slip_values_outside_unit_interval_are_rejected() {
    assert!(CliffWorld::new(CliffWorldParams::with_slip(1.5)).is_err());
    assert!(CliffWorld::new(CliffWorldParams::with_slip(-0.1)).is_err());
    assert!(CliffWorld::new(CliffWorldParams::with_slip(f64::NAN)).is_err());
}

#[test]
fn nonpositive_physics_is_rejected() {
    let params = CartPoleParams {
        mass_pole: 0.0,
        ..CartPoleParams::sim()
    };
    assert!(CartPole::new(params).is_err());
}
