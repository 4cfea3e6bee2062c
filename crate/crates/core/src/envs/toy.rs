//! Single-decision MDPs where GAT and SGAT part ways.
//!
//! States: `0 = s_0` (start), `1 = s_1`, `2 = s_2`, `3 = s_3`; states other
//! than `s_0` are terminal. Actions `0, 1, 2` are `a_1, a_2, a_3`. The reward
//! is the terminal reward of the state reached: `s_1 = +1`, `s_2 = -1`,
//! `s_3 = +10`.

use serde::{Deserialize, Serialize};

use crate::mdp::TabularMdpModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyMdp {
    /// `a_1 → s_1`, `a_2 → s_2`.
    SimDeterministic2Action,
    /// Flipped: `a_1 → s_2`, `a_2 → s_1`.
    RealFlipped2Action,
    /// `a_1 → s_1`, `a_2 → s_2`, `a_3 → s_3`.
    SimDeterministic3Action,
    /// `a_1 → s_1`, `a_2 → s_2` (80%) or `s_3` (20%), `a_3 → s_2`.
    RealStochastic3Action,
}

pub const S0: usize = 0;
pub const S1: usize = 1;
pub const S2: usize = 2;
pub const S3: usize = 3;
pub const A1: usize = 0;
pub const A2: usize = 1;
pub const A3: usize = 2;

/// Probability that `a_2` reaches `s_3` in the stochastic real MDP.
pub const LUCKY_BRANCH: f64 = 0.2;

fn terminal_reward(s: usize) -> f64 {
    match s {
        S1 => 1.0,
        S2 => -1.0,
        S3 => 10.0,
        _ => 0.0,
    }
}

impl ToyMdp {
    pub fn num_actions(self) -> usize {
        match self {
            ToyMdp::SimDeterministic2Action | ToyMdp::RealFlipped2Action => 2,
            _ => 3,
        }
    }

    pub fn num_states(self) -> usize {
        self.num_actions() + 1
    }

    pub fn model(self) -> TabularMdpModel {
        let mut m = TabularMdpModel::new(self.num_states(), self.num_actions(), S0, 1, |_, s| {
            terminal_reward(s)
        });
        for s in 1..self.num_states() {
            m.set_terminal(s, false);
        }
        match self {
            ToyMdp::SimDeterministic2Action => {
                m.add(S0, A1, S1, 1.0);
                m.add(S0, A2, S2, 1.0);
            }
            ToyMdp::RealFlipped2Action => {
                m.add(S0, A1, S2, 1.0);
                m.add(S0, A2, S1, 1.0);
            }
            ToyMdp::SimDeterministic3Action => {
                m.add(S0, A1, S1, 1.0);
                m.add(S0, A2, S2, 1.0);
                m.add(S0, A3, S3, 1.0);
            }
            ToyMdp::RealStochastic3Action => {
                m.add(S0, A1, S1, 1.0);
                m.add(S0, A2, S2, 1.0 - LUCKY_BRANCH);
                m.add(S0, A2, S3, LUCKY_BRANCH);
                m.add(S0, A3, S2, 1.0);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expected_value(m: &TabularMdpModel, a: usize) -> f64 {
        m.outcomes(S0, a).iter().map(|o| o.prob * o.reward).sum()
    }

    #[test]
    fn all_variants_are_valid_models() {
        for t in [
            ToyMdp::SimDeterministic2Action,
            ToyMdp::RealFlipped2Action,
            ToyMdp::SimDeterministic3Action,
            ToyMdp::RealStochastic3Action,
        ] {
            t.model().validate().unwrap();
        }
    }

    #[test]
    fn stochastic_real_expected_returns() {
        let m = ToyMdp::RealStochastic3Action.model();
        assert_eq!(expected_value(&m, A1), 1.0);
        assert!((expected_value(&m, A2) - 1.2).abs() < 1e-12);
        assert_eq!(expected_value(&m, A3), -1.0);
    }

    #[test]
    fn flipped_real_swaps_outcomes() {
        let sim = ToyMdp::SimDeterministic2Action.model();
        let real = ToyMdp::RealFlipped2Action.model();
        assert_eq!(sim.outcomes(S0, A1)[0].next, real.outcomes(S0, A2)[0].next);
        assert_eq!(sim.outcomes(S0, A2)[0].next, real.outcomes(S0, A1)[0].next);
    }
}
