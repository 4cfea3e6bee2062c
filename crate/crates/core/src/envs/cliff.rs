//! Cliff Walking with slip noise.
//!
//! The start is the bottom-left cell, the goal the bottom-right cell, and the
//! cells between them on the bottom row are the cliff. Every step costs
//! `step_penalty`; entering the goal or the cliff adds the terminal reward on
//! top and ends the episode. With probability `slip_prob` the executed
//! direction is redrawn uniformly from all four directions (possibly the
//! chosen one). Moving into a wall leaves the agent in place.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mdp::{uniform_action, DiscreteEnv, Env, Step, TabularMdpModel, TabularModelSource};
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliffAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl CliffAction {
    pub const ALL: [CliffAction; 4] = [Self::Up, Self::Down, Self::Left, Self::Right];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliffWorldParams {
    pub rows: usize,
    pub cols: usize,
    pub step_penalty: f64,
    pub goal_reward: f64,
    pub cliff_reward: f64,
    pub slip_prob: f64,
    pub horizon: usize,
}

impl Default for CliffWorldParams {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 12,
            step_penalty: -0.1,
            goal_reward: 100.0,
            cliff_reward: -10.0,
            slip_prob: 0.0,
            horizon: 1000,
        }
    }
}

impl CliffWorldParams {
    pub fn with_slip(slip_prob: f64) -> Self {
        Self {
            slip_prob,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.slip_prob) {
            return Err(Error::config(
                "cliff.slip_prob",
                format!("{} not in [0, 1]", self.slip_prob),
            ));
        }
        if self.rows < 2 || self.cols < 3 {
            return Err(Error::config(
                "cliff.rows/cols",
                "grid must be at least 2x3",
            ));
        }
        if self.horizon == 0 {
            return Err(Error::config("cliff.horizon", "must be at least 1"));
        }
        Ok(())
    }
}

/// Validated Cliff Walking environment.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffWorld {
    params: CliffWorldParams,
}

impl CliffWorld {
    pub fn new(params: CliffWorldParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &CliffWorldParams {
        &self.params
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.params.cols + col
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.params.cols, cell % self.params.cols)
    }

    pub fn start(&self) -> usize {
        self.cell(self.params.rows - 1, 0)
    }

    pub fn goal(&self) -> usize {
        self.cell(self.params.rows - 1, self.params.cols - 1)
    }

    pub fn is_cliff(&self, cell: usize) -> bool {
        let (r, c) = self.coords(cell);
        r == self.params.rows - 1 && c > 0 && c < self.params.cols - 1
    }

    pub fn is_terminal(&self, cell: usize) -> bool {
        cell == self.goal() || self.is_cliff(cell)
    }

    /// Deterministic effect of moving `dir` from `cell`.
    pub fn moved(&self, cell: usize, dir: usize) -> usize {
        let (r, c) = self.coords(cell);
        let (r, c) = match CliffAction::from_index(dir) {
            Some(CliffAction::Up) => (r.saturating_sub(1), c),
            Some(CliffAction::Down) => ((r + 1).min(self.params.rows - 1), c),
            Some(CliffAction::Left) => (r, c.saturating_sub(1)),
            Some(CliffAction::Right) => (r, (c + 1).min(self.params.cols - 1)),
            None => (r, c),
        };
        self.cell(r, c)
    }

    fn landing_reward(&self, next: usize) -> f64 {
        let mut r = self.params.step_penalty;
        if next == self.goal() {
            r += self.params.goal_reward;
        } else if self.is_cliff(next) {
            r += self.params.cliff_reward;
        }
        r
    }

    /// One slip-noisy move.
    pub fn cliff_step(&self, cell: usize, action: usize, rng: &mut SimRng) -> Result<Step<usize>> {
        if cell >= self.num_states() || action >= 4 {
            return Err(Error::Contract(format!("({cell},{action}) out of range")));
        }
        if self.is_terminal(cell) {
            return Err(Error::Contract(format!("step from terminal cell {cell}")));
        }
        let slipped = rng.random::<f64>() < self.params.slip_prob;
        let dir = if slipped {
            rng.random_range(0..4)
        } else {
            action
        };
        let next = self.moved(cell, dir);
        Ok(Step {
            next,
            reward: self.landing_reward(next),
            terminal: self.is_terminal(next),
        })
    }

    /// Exact `P(s'|s,a)` of [`cliff_step`](Self::cliff_step).
    pub fn exact_transition_matrix(&self) -> TabularMdpModel {
        let n = self.num_states();
        let p = self.params.slip_prob;
        let mut m = TabularMdpModel::new(n, 4, self.start(), self.params.horizon, |_, s| {
            self.landing_reward(s)
        });
        for s in 0..n {
            if self.is_terminal(s) {
                m.set_terminal(s, self.is_cliff(s));
                continue;
            }
            for a in 0..4 {
                m.add(s, a, self.moved(s, a), 1.0 - p);
                for d in 0..4 {
                    m.add(s, a, self.moved(s, d), p / 4.0);
                }
            }
        }
        m
    }
}

impl Env for CliffWorld {
    type State = usize;
    type Action = usize;

    fn reset(&self, _rng: &mut SimRng) -> usize {
        self.start()
    }

    fn step(&self, state: &usize, action: &usize, rng: &mut SimRng) -> Result<Step<usize>> {
        self.cliff_step(*state, *action, rng)
    }

    fn reward(&self, _action: &usize, next: &usize) -> f64 {
        self.landing_reward(*next)
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn explore(&self, action: &usize, scale: f64, rng: &mut SimRng) -> usize {
        if rng.random::<f64>() < scale {
            uniform_action(4, rng)
        } else {
            *action
        }
    }

    fn reset_anywhere(&self, rng: &mut SimRng) -> usize {
        loop {
            let s = rng.random_range(0..self.num_states());
            if !self.is_terminal(s) {
                return s;
            }
        }
    }

    fn is_failure(&self, state: &usize) -> bool {
        self.is_cliff(*state)
    }
}

impl DiscreteEnv for CliffWorld {
    fn num_states(&self) -> usize {
        self.params.rows * self.params.cols
    }

    fn num_actions(&self) -> usize {
        4
    }
}

impl TabularModelSource for CliffWorld {
    fn tabular_model(&self) -> TabularMdpModel {
        self.exact_transition_matrix()
    }
}
