use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;

use super::{require_source, FitDiagnostics, ForwardModel, InverseModel, ModelFamily};
use crate::grounding::GroundingMode;
use crate::mdp::{Provenance, Trajectory};
use crate::neural::checkpoint::Lines;
use crate::rng::SimRng;
use crate::{Error, Result};

/// Visit counts `N(s, a, s')` from real transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularForwardModel {
    num_states: usize,
    num_actions: usize,
    counts: Vec<BTreeMap<usize, u64>>,
}

impl TabularForwardModel {
    pub fn empty(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            counts: vec![BTreeMap::new(); num_states * num_actions],
        }
    }

    /// Empirical `P̂(s'|s,a)` from real trajectories.
    pub fn fit(
        num_states: usize,
        num_actions: usize,
        real: &[Trajectory<usize, usize>],
    ) -> Result<Self> {
        require_source(real, Provenance::Real)?;
        let mut model = Self::empty(num_states, num_actions);
        for t in real.iter().flat_map(|t| &t.transitions) {
            model.observe(t.state, t.action, t.next_state)?;
        }
        Ok(model)
    }

    pub fn observe(&mut self, s: usize, a: usize, next: usize) -> Result<()> {
        if s >= self.num_states || a >= self.num_actions || next >= self.num_states {
            return Err(Error::Contract(format!(
                "transition ({s},{a},{next}) out of range"
            )));
        }
        *self.counts[s * self.num_actions + a]
            .entry(next)
            .or_insert(0) += 1;
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn counts(&self, s: usize, a: usize) -> &BTreeMap<usize, u64> {
        &self.counts[s * self.num_actions + a]
    }

    pub fn is_seen(&self, s: usize, a: usize) -> bool {
        !self.counts(s, a).is_empty()
    }

    /// `P̂(·|s,a)` sorted by next state, `None` when unseen.
    pub fn probabilities(&self, s: usize, a: usize) -> Option<Vec<(usize, f64)>> {
        let counts = self.counts(s, a);
        let total: u64 = counts.values().sum();
        (total > 0).then(|| {
            counts
                .iter()
                .map(|(&n, &c)| (n, c as f64 / total as f64))
                .collect()
        })
    }

    /// Most frequent next state; ties go to the lowest state index.
    pub fn mode(&self, s: usize, a: usize) -> Option<usize> {
        let mut best: Option<(usize, u64)> = None;
        for (&next, &c) in self.counts(s, a) {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((next, c));
            }
        }
        best.map(|(n, _)| n)
    }

    /// One line per seen `(s, a)`: `s a next:count next:count ...`, after a
    /// `tabular-forward <num_states> <num_actions>` header.
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "tabular-forward {} {}",
            self.num_states, self.num_actions
        )?;
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let counts = self.counts(s, a);
                if counts.is_empty() {
                    continue;
                }
                let cells: Vec<String> = counts.iter().map(|(n, c)| format!("{n}:{c}")).collect();
                writeln!(w, "{s} {a} {}", cells.join(" "))?;
            }
        }
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let mut lines = Lines::new(r);
        let header = lines.expect("tabular-forward")?;
        if header.len() != 2 {
            return Err(lines.error("expected `tabular-forward <states> <actions>`"));
        }
        let mut model = Self::empty(lines.parse(&header[0])?, lines.parse(&header[1])?);
        loop {
            let line = lines.next_line()?.to_owned();
            if line == "end" {
                return Ok(model);
            }
            let mut parts = line.split_whitespace();
            let s: usize = lines.parse(parts.next().unwrap_or(""))?;
            let a: usize = lines.parse(parts.next().unwrap_or(""))?;
            for cell in parts {
                let (n, c) = cell
                    .split_once(':')
                    .ok_or_else(|| lines.error(format!("expected next:count, found `{cell}`")))?;
                let (n, c): (usize, u64) = (lines.parse(n)?, lines.parse(c)?);
                if s >= model.num_states || a >= model.num_actions || n >= model.num_states {
                    return Err(lines.error("index out of range"));
                }
                *model.counts[s * model.num_actions + a]
                    .entry(n)
                    .or_insert(0) += c;
            }
        }
    }
}

impl ForwardModel<usize, usize> for TabularForwardModel {
    fn predict(&self, s: &usize, a: &usize) -> Option<usize> {
        self.mode(*s, *a)
    }

    fn sample(&self, s: &usize, a: &usize, rng: &mut SimRng) -> Option<usize> {
        let counts = self.counts(*s, *a);
        let total: u64 = counts.values().sum();
        if total == 0 {
            return None;
        }
        let mut pick = rng.random_range(0..total);
        for (&next, &c) in counts {
            if pick < c {
                return Some(next);
            }
            pick -= c;
        }
        unreachable!("pick below total")
    }
}

/// `(s, s') → action` table built from sim transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularInverseModel {
    actions: BTreeMap<(usize, usize), BTreeMap<usize, u64>>,
}

impl TabularInverseModel {
    pub fn fit(sim: &[Trajectory<usize, usize>]) -> Result<Self> {
        require_source(sim, Provenance::Sim)?;
        let mut actions: BTreeMap<(usize, usize), BTreeMap<usize, u64>> = BTreeMap::new();
        for t in sim.iter().flat_map(|t| &t.transitions) {
            *actions
                .entry((t.state, t.next_state))
                .or_default()
                .entry(t.action)
                .or_insert(0) += 1;
        }
        Ok(Self { actions })
    }

    /// Number of distinct `(s, s')` pairs observed.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// `tabular-inverse` header, then `s next action:count ...` per pair.
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "tabular-inverse")?;
        for ((s, n), acts) in &self.actions {
            let cells: Vec<String> = acts.iter().map(|(a, c)| format!("{a}:{c}")).collect();
            writeln!(w, "{s} {n} {}", cells.join(" "))?;
        }
        writeln!(w, "end")?;
        Ok(())
    }
}

impl InverseModel<usize, usize> for TabularInverseModel {
    /// For a deterministic sim every recorded action reproduces the
    /// transition; the lowest recorded index is returned.
    fn invert(&self, s: &usize, next: &usize) -> Option<usize> {
        self.actions
            .get(&(*s, *next))
            .and_then(|acts| acts.keys().next().copied())
    }
}

/// Count-based models over a finite state/action space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TabularFamily {
    pub num_states: usize,
    pub num_actions: usize,
}

impl ModelFamily<usize, usize> for TabularFamily {
    type Forward = TabularForwardModel;
    type Inverse = TabularInverseModel;

    fn fit_forward(
        &self,
        real: &[Trajectory<usize, usize>],
        _mode: GroundingMode,
        _seed: u64,
    ) -> Result<(TabularForwardModel, FitDiagnostics)> {
        let model = TabularForwardModel::fit(self.num_states, self.num_actions, real)?;
        let transitions = real.iter().map(|t| t.len()).sum();
        Ok((
            model,
            FitDiagnostics {
                loss: f64::NAN,
                transitions,
            },
        ))
    }

    fn fit_inverse(
        &self,
        sim: &[Trajectory<usize, usize>],
        _seed: u64,
    ) -> Result<(TabularInverseModel, FitDiagnostics)> {
        let model = TabularInverseModel::fit(sim)?;
        let transitions = sim.iter().map(|t| t.len()).sum();
        Ok((
            model,
            FitDiagnostics {
                loss: f64::NAN,
                transitions,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Transition;
    use crate::rng;

    fn real_trajectory(steps: &[(usize, usize, usize)]) -> Trajectory<usize, usize> {
        Trajectory {
            transitions: steps
                .iter()
                .map(|&(s, a, n)| Transition {
                    state: s,
                    action: a,
                    next_state: n,
                    reward: 0.0,
                    terminal: true,
                })
                .collect(),
            episode_return: 0.0,
            failed: false,
            source: Provenance::Real,
        }
    }

    fn lucky_branch_data() -> Vec<Trajectory<usize, usize>> {
        let mut data = vec![real_trajectory(&[(0, 1, 2)]); 8];
        data.extend(vec![real_trajectory(&[(0, 1, 3)]); 2]);
        data
    }

    #[test]
    fn empirical_frequencies() {
        let m = TabularForwardModel::fit(4, 3, &lucky_branch_data()).unwrap();
        assert_eq!(m.probabilities(0, 1).unwrap(), vec![(2, 0.8), (3, 0.2)]);
        assert_eq!(m.predict(&0, &1), Some(2));
        assert!(!m.is_seen(0, 0));
    }

    #[test]
    fn single_transition_is_one_hot() {
        let m = TabularForwardModel::fit(4, 3, &[real_trajectory(&[(0, 0, 1)])]).unwrap();
        assert_eq!(m.probabilities(0, 0).unwrap(), vec![(1, 1.0)]);
        let mut r = rng::stream(0, 0);
        assert!((0..100).all(|_| m.sample(&0, &0, &mut r) == Some(1)));
        assert_eq!(m.predict(&0, &0), Some(1));
    }

    #[test]
    fn mode_ties_break_to_lowest_index() {
        let mut m = TabularForwardModel::empty(8, 1);
        m.observe(0, 0, 7).unwrap();
        m.observe(0, 0, 3).unwrap();
        assert_eq!(m.predict(&0, &0), Some(3));
    }

    #[test]
    fn sampling_frequency_of_lucky_branch() {
        let m = TabularForwardModel::fit(4, 3, &lucky_branch_data()).unwrap();
        let mut r = rng::stream(11, 0);
        let hits = (0..10_000)
            .filter(|_| m.sample(&0, &1, &mut r) == Some(3))
            .count();
        let freq = hits as f64 / 10_000.0;
        assert!((freq - 0.2).abs() < 0.012, "{freq}");
    }

    #[test]
    fn unseen_pair_yields_none() {
        let m = TabularForwardModel::fit(4, 3, &lucky_branch_data()).unwrap();
        assert_eq!(m.predict(&0, &2), None);
        assert_eq!(m.sample(&0, &2, &mut rng::stream(0, 0)), None);
    }

    #[test]
    fn rejects_sim_data() {
        let data = vec![real_trajectory(&[(0, 0, 1)]).with_source(Provenance::Sim)];
        assert!(TabularForwardModel::fit(4, 3, &data).is_err());
        assert!(TabularInverseModel::fit(&lucky_branch_data()).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = TabularForwardModel::fit(4, 3, &lucky_branch_data()).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "tabular-forward 4 3\n0 1 2:8 3:2\nend\n"
        );
        assert_eq!(TabularForwardModel::read_text(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn malformed_text_reports_line() {
        let text = "tabular-forward 4 3\n0 1 2:8\n0 1 nonsense\nend\n";
        match TabularForwardModel::read_text(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
