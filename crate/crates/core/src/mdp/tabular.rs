use rand::Rng;

use super::{uniform_action, DiscreteEnv, Env, Provenance, Step, Trajectory, Transition};
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

/// Finite episodic MDP: sparse `P(s'|s,a)` with per-outcome rewards, a dense
/// `R(a, s')` table, and a terminal set.
///
/// Outcomes of each `(s, a)` are kept sorted by next-state index.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdpModel {
    num_states: usize,
    num_actions: usize,
    outcomes: Vec<Vec<Outcome>>,
    reward_table: Vec<f64>,
    terminal: Vec<bool>,
    failure: Vec<bool>,
    start: usize,
    horizon: usize,
}

impl TabularMdpModel {
    /// Model with no transitions yet. `reward(a, s')` fills the reward table.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        start: usize,
        horizon: usize,
        reward: impl Fn(usize, usize) -> f64,
    ) -> Self {
        let mut reward_table = vec![0.0; num_actions * num_states];
        for a in 0..num_actions {
            for s in 0..num_states {
                reward_table[a * num_states + s] = reward(a, s);
            }
        }
        Self {
            num_states,
            num_actions,
            outcomes: vec![Vec::new(); num_states * num_actions],
            reward_table,
            terminal: vec![false; num_states],
            failure: vec![false; num_states],
            start,
            horizon,
        }
    }

    pub fn set_terminal(&mut self, s: usize, failure: bool) {
        self.terminal[s] = true;
        self.failure[s] = failure;
        for a in 0..self.num_actions {
            self.outcomes[s * self.num_actions + a].clear();
        }
    }

    /// Adds probability mass `p` on `s'` for `(s, a)`, merging with any
    /// existing outcome to the same next state. Reward defaults to `R(a, s')`.
    pub fn add(&mut self, s: usize, a: usize, next: usize, p: f64) {
        let r = self.reward(a, next);
        self.add_with_reward(s, a, next, p, r);
    }

    /// As [`add`](Self::add) with an explicit reward. Rewards of merged
    /// outcomes are probability-weighted.
    pub fn add_with_reward(&mut self, s: usize, a: usize, next: usize, p: f64, reward: f64) {
        if p == 0.0 {
            return;
        }
        let row = &mut self.outcomes[s * self.num_actions + a];
        match row.binary_search_by_key(&next, |o| o.next) {
            Ok(i) => {
                let o = &mut row[i];
                let total = o.prob + p;
                o.reward = (o.reward * o.prob + reward * p) / total;
                o.prob = total;
            }
            Err(i) => row.insert(
                i,
                Outcome {
                    next,
                    prob: p,
                    reward,
                },
            ),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.outcomes[s * self.num_actions + a]
    }

    pub fn reward(&self, a: usize, next: usize) -> f64 {
        self.reward_table[a * self.num_states + next]
    }

    pub fn probability(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a)
            .iter()
            .find(|o| o.next == next)
            .map_or(0.0, |o| o.prob)
    }

    /// Dense row `P(·|s,a)`.
    pub fn row(&self, s: usize, a: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.num_states];
        for o in self.outcomes(s, a) {
            row[o.next] += o.prob;
        }
        row
    }

    pub fn terminal_flags(&self) -> &[bool] {
        &self.terminal
    }

    pub fn failure_flags(&self) -> &[bool] {
        &self.failure
    }

    /// Every `(s, a)` has exactly one outcome.
    pub fn is_deterministic(&self) -> bool {
        (0..self.num_states)
            .filter(|&s| !self.terminal[s])
            .all(|s| (0..self.num_actions).all(|a| self.outcomes(s, a).len() == 1))
    }

    /// One single-step trajectory per outcome, duplicated in proportion to
    /// its probability: `round(p * copies_per_unit)` copies. Empirical
    /// frequencies in the result equal the model's probabilities whenever
    /// they are multiples of `1 / copies_per_unit`.
    pub fn exhaustive_data(&self, copies_per_unit: u64) -> Vec<Trajectory<usize, usize>> {
        let mut out = Vec::new();
        for s in (0..self.num_states).filter(|&s| !self.terminal[s]) {
            for a in 0..self.num_actions {
                for o in self.outcomes(s, a) {
                    let copies = (o.prob * copies_per_unit as f64).round() as u64;
                    let terminal = self.terminal[o.next];
                    let t = Trajectory {
                        transitions: vec![Transition {
                            state: s,
                            action: a,
                            next_state: o.next,
                            reward: o.reward,
                            terminal,
                        }],
                        episode_return: o.reward,
                        failed: terminal && self.failure[o.next],
                        source: Provenance::Unlabeled,
                    };
                    out.extend(std::iter::repeat_n(t, copies as usize));
                }
            }
        }
        out
    }

    /// Rows of non-terminal states sum to one and every index is in range.
    pub fn validate(&self) -> Result<()> {
        if self.start >= self.num_states {
            return Err(Error::Contract(format!(
                "start state {} out of range",
                self.start
            )));
        }
        for s in 0..self.num_states {
            if self.terminal[s] {
                continue;
            }
            for a in 0..self.num_actions {
                let row = self.outcomes(s, a);
                let total: f64 = row.iter().map(|o| o.prob).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Contract(format!(
                        "P(.|{s},{a}) sums to {total}, expected 1"
                    )));
                }
                if let Some(o) = row
                    .iter()
                    .find(|o| o.next >= self.num_states || o.prob < 0.0)
                {
                    return Err(Error::Contract(format!("bad outcome {o:?} for ({s},{a})")));
                }
            }
        }
        Ok(())
    }
}

impl Env for TabularMdpModel {
    type State = usize;
    type Action = usize;

    fn reset(&self, _rng: &mut SimRng) -> usize {
        self.start
    }

    fn step(&self, state: &usize, action: &usize, rng: &mut SimRng) -> Result<Step<usize>> {
        let (s, a) = (*state, *action);
        if s >= self.num_states || a >= self.num_actions {
            return Err(Error::Contract(format!("({s},{a}) out of range")));
        }
        if self.terminal[s] {
            return Err(Error::Contract(format!("step from terminal state {s}")));
        }
        let row = self.outcomes(s, a);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = &row[row.len() - 1];
        for o in row {
            acc += o.prob;
            if u < acc {
                chosen = o;
                break;
            }
        }
        Ok(Step {
            next: chosen.next,
            reward: chosen.reward,
            terminal: self.terminal[chosen.next],
        })
    }

    fn reward(&self, action: &usize, next: &usize) -> f64 {
        TabularMdpModel::reward(self, *action, *next)
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn explore(&self, action: &usize, scale: f64, rng: &mut SimRng) -> usize {
        if rng.random::<f64>() < scale {
            uniform_action(self.num_actions, rng)
        } else {
            *action
        }
    }

    fn reset_anywhere(&self, rng: &mut SimRng) -> usize {
        let open: Vec<usize> = (0..self.num_states)
            .filter(|&s| !self.terminal[s])
            .collect();
        open[rng.random_range(0..open.len())]
    }

    fn is_failure(&self, state: &usize) -> bool {
        self.failure[*state]
    }
}

impl DiscreteEnv for TabularMdpModel {
    fn num_states(&self) -> usize {
        self.num_states
    }
    fn num_actions(&self) -> usize {
        self.num_actions
    }
}

/// Source of an exact transition table, used for planning.
pub trait TabularModelSource {
    fn tabular_model(&self) -> TabularMdpModel;
}

impl TabularModelSource for TabularMdpModel {
    fn tabular_model(&self) -> TabularMdpModel {
        self.clone()
    }
}

impl<T: TabularModelSource + ?Sized> TabularModelSource for &T {
    fn tabular_model(&self) -> TabularMdpModel {
        (**self).tabular_model()
    }
}
