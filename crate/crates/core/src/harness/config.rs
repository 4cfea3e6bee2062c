use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::InverseEncoding;
use crate::envs::{CartPoleParams, CliffWorldParams};
use crate::grounding::GroundingLoopConfig;
use crate::neural::TrainConfig;
use crate::policy_opt::{CmaesConfig, PolicyIterationConfig};
use crate::{Error, Result};

/// Environment variable naming the default directory for result files.
pub const OUTPUT_DIR_VAR: &str = "SGAT_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Three-action one-step MDP with a lucky stochastic branch in the real env.
    Toy,
    /// Cliff walking; the noise grid is the real env's slip probability.
    CliffSweep,
    /// Cart-pole whose "real" env only adds action noise; the grid is its std.
    CartpoleNoisysim,
    /// Cart-pole with a heavier pole plus action noise; the grid is the std.
    CartpoleNoisyreal,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Toy => "toy",
            ExperimentKind::CliffSweep => "cliff-sweep",
            ExperimentKind::CartpoleNoisysim => "cartpole-noisysim",
            ExperimentKind::CartpoleNoisyreal => "cartpole-noisyreal",
        }
    }

    pub fn is_continuous(self) -> bool {
        matches!(
            self,
            ExperimentKind::CartpoleNoisysim | ExperimentKind::CartpoleNoisyreal
        )
    }

    fn parse(name: &str) -> Result<Self> {
        match name {
            "toy" => Ok(ExperimentKind::Toy),
            "cliff-sweep" => Ok(ExperimentKind::CliffSweep),
            "cartpole-noisysim" => Ok(ExperimentKind::CartpoleNoisysim),
            "cartpole-noisyreal" => Ok(ExperimentKind::CartpoleNoisyreal),
            other => Err(Error::config(
                "experiment",
                format!("unknown experiment {other:?}; expected toy, cliff-sweep, cartpole-noisysim or cartpole-noisyreal"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Train on the raw simulator.
    None,
    Gat,
    Sgat,
    /// Action-noise envelope with a grid search over its σ.
    Ane,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::None => "none",
            Algorithm::Gat => "gat",
            Algorithm::Sgat => "sgat",
            Algorithm::Ane => "ane",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AneSearchConfig {
    pub sigmas: Vec<f64>,
    /// Real episodes used to score each σ.
    pub eval_episodes: usize,
}

impl Default for AneSearchConfig {
    fn default() -> Self {
        Self {
            sigmas: vec![0.1, 0.3, 0.6],
            eval_episodes: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub algorithms: Vec<Algorithm>,
    /// Slip probabilities (cliff) or action-noise stds (cart-pole). The toy
    /// experiment has no noise axis and ignores it.
    pub noise: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Real episodes used to evaluate each final policy.
    pub eval_episodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<PathBuf>,
    /// Toy: duplicates per unit probability when enumerating transitions.
    pub toy_resolution: u64,
    pub inverse_encoding: InverseEncoding,
    pub grounding: GroundingLoopConfig,
    pub policy_iteration: PolicyIterationConfig,
    pub cmaes: CmaesConfig,
    pub neural: TrainConfig,
    pub ane: AneSearchConfig,
    pub cliff: CliffWorldParams,
    /// Cart-pole physics. The simulator uses it with a unit pole-mass factor
    /// and no action noise; the real env keeps `pole_mass_factor` and takes
    /// its noise std from the grid.
    pub cartpole: CartPoleParams,
}

impl ExperimentConfig {
    /// Defaults for each experiment; a config file only overrides these.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = Self {
            experiment: kind,
            algorithms: vec![Algorithm::Gat, Algorithm::Sgat],
            noise: Vec::new(),
            trials: 1,
            seed: 0,
            eval_episodes: 10_000,
            output: None,
            diagnostics: None,
            toy_resolution: 10,
            inverse_encoding: InverseEncoding::Concat,
            grounding: GroundingLoopConfig::default(),
            policy_iteration: PolicyIterationConfig::default(),
            cmaes: CmaesConfig::default(),
            neural: TrainConfig::default(),
            ane: AneSearchConfig::default(),
            cliff: CliffWorldParams::default(),
            cartpole: CartPoleParams::sim(),
        };
        match kind {
            ExperimentKind::Toy => Self {
                algorithms: vec![Algorithm::None, Algorithm::Gat, Algorithm::Sgat],
                ..base
            },
            ExperimentKind::CliffSweep => Self {
                noise: (0..=10).map(|i| i as f64 / 10.0).collect(),
                ..base
            },
            ExperimentKind::CartpoleNoisysim | ExperimentKind::CartpoleNoisyreal => Self {
                algorithms: vec![Algorithm::None, Algorithm::Gat, Algorithm::Sgat],
                noise: vec![0.0, 0.3, 0.6],
                trials: 5,
                eval_episodes: 100,
                inverse_encoding: InverseEncoding::Delta,
                grounding: GroundingLoopConfig {
                    max_iterations: 3,
                    real_episodes: 20,
                    sim_episodes: 50,
                    eval_episodes: 50,
                    real_exploration: 0.1,
                    sim_exploration: 0.5,
                    ..GroundingLoopConfig::default()
                },
                cmaes: CmaesConfig {
                    population: 16,
                    initial_step: 0.5,
                    max_generations: 30,
                    ..CmaesConfig::default()
                },
                neural: TrainConfig {
                    epochs: 30,
                    ..TrainConfig::default()
                },
                cartpole: if kind == ExperimentKind::CartpoleNoisyreal {
                    CartPoleParams::real(10.0, 0.0)
                } else {
                    CartPoleParams::sim()
                },
                ..base
            },
        }
    }

    /// Parses a TOML config and applies `section.key=value` overrides.
    ///
    /// The `experiment` key selects a preset; the file and the overrides are
    /// merged over it key by key.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("config", e.to_string()))?;
        for o in overrides {
            apply_override(&mut user, o)?;
        }
        let kind = match user.get("experiment") {
            Some(toml::Value::String(name)) => ExperimentKind::parse(name)?,
            Some(_) => return Err(Error::config("experiment", "must be a string")),
            None => return Err(Error::config("experiment", "missing")),
        };
        let mut merged = toml::Table::try_from(Self::preset(kind))
            .map_err(|e| Error::config("config", e.to_string()))?;
        merge(&mut merged, user);
        let config: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("config", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Rejects bad values before any work starts, naming the field.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config(
                "algorithms",
                "must name at least one algorithm",
            ));
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(Error::config("algorithms", "must not repeat an algorithm"));
        }
        if self.algorithms.contains(&Algorithm::Ane) && !self.experiment.is_continuous() {
            return Err(Error::config(
                "algorithms",
                format!(
                    "ane needs continuous actions; {} is discrete",
                    self.experiment.name()
                ),
            ));
        }
        if self.experiment != ExperimentKind::Toy && self.noise.is_empty() {
            return Err(Error::config("noise", "must list at least one value"));
        }
        for (i, &x) in self.noise.iter().enumerate() {
            let ok = match self.experiment {
                ExperimentKind::Toy => true,
                ExperimentKind::CliffSweep => (0.0..=1.0).contains(&x),
                _ => x >= 0.0 && x.is_finite(),
            };
            if !ok {
                let domain = if self.experiment == ExperimentKind::CliffSweep {
                    "a probability in [0, 1]"
                } else {
                    "a finite std >= 0"
                };
                return Err(Error::config(
                    format!("noise[{i}]"),
                    format!("{x} is not {domain}"),
                ));
            }
        }
        let mut grid = self.noise.clone();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        if grid.len() != self.noise.len() {
            return Err(Error::config("noise", "must not repeat a value"));
        }
        if self.toy_resolution == 0 {
            return Err(Error::config("toy_resolution", "must be at least 1"));
        }
        self.grounding.validate()?;
        if !(self.policy_iteration.tolerance > 0.0) {
            return Err(Error::config(
                "policy_iteration.tolerance",
                "must be positive",
            ));
        }
        self.neural.validate()?;
        match self.experiment {
            ExperimentKind::Toy => {}
            ExperimentKind::CliffSweep => self.cliff.validate()?,
            ExperimentKind::CartpoleNoisysim | ExperimentKind::CartpoleNoisyreal => {
                self.cartpole.validate()?;
                let mut cmaes = self.cmaes.clone();
                cmaes.initial_mean = vec![0.0];
                cmaes.validate()?;
                if self.algorithms.contains(&Algorithm::Ane) {
                    if self.ane.sigmas.is_empty() {
                        return Err(Error::config(
                            "ane.sigmas",
                            "at least one candidate is required",
                        ));
                    }
                    for (i, &s) in self.ane.sigmas.iter().enumerate() {
                        if !(s >= 0.0 && s.is_finite()) {
                            return Err(Error::config(
                                format!("ane.sigmas[{i}]"),
                                "must be a finite std >= 0",
                            ));
                        }
                    }
                    if self.ane.eval_episodes == 0 {
                        return Err(Error::config("ane.eval_episodes", "must be at least 1"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Where result rows go: `output`, else `$SGAT_OUTPUT_DIR/<experiment>.csv`,
    /// else `results/<experiment>.csv`.
    pub fn output_path(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| {
            let dir = std::env::var_os(OUTPUT_DIR_VAR)
                .map(PathBuf::from)
                .unwrap_or_else(|| "results".into());
            dir.join(format!("{}.csv", self.experiment.name()))
        })
    }

    /// Defaults to the results path with a `.diagnostics.csv` suffix.
    pub fn diagnostics_path(&self) -> PathBuf {
        self.diagnostics.clone().unwrap_or_else(|| {
            let out = self.output_path();
            let stem = out
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.with_file_name(format!("{stem}.diagnostics.csv"))
        })
    }
}

/// `a.b.c=value`; the value is parsed as TOML and falls back to a bare string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like section.key=value"))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::config(path, "empty key in override path"));
    }
    let mut node = table;
    for key in &keys[..keys.len() - 1] {
        let entry = node
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(path, format!("{key} is not a section")))?;
    }
    node.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_round_trips_through_toml() {
        for kind in [
            ExperimentKind::Toy,
            ExperimentKind::CliffSweep,
            ExperimentKind::CartpoleNoisysim,
            ExperimentKind::CartpoleNoisyreal,
        ] {
            let c = ExperimentConfig::preset(kind);
            let back = ExperimentConfig::from_toml(&c.to_toml(), &[]).unwrap();
            assert_eq!(c, back);
        }
    }

    #[test]
    fn overrides_reach_nested_sections() {
        let c = ExperimentConfig::from_toml(
            "experiment = \"cliff-sweep\"\n[grounding]\nreal_episodes = 7\n",
            &["grounding.max_iterations=2".into(), "noise=[0.5]".into()],
        )
        .unwrap();
        assert_eq!(c.grounding.real_episodes, 7);
        assert_eq!(c.grounding.max_iterations, 2);
        assert_eq!(c.grounding.sim_episodes, 50);
        assert_eq!(c.noise, vec![0.5]);
    }

    fn field_of(text: &str, overrides: &[&str]) -> String {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        match ExperimentConfig::from_toml(text, &o) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_values_name_the_field() {
        let cliff = "experiment = \"cliff-sweep\"";
        assert_eq!(field_of(cliff, &["noise=[0.5, 1.5]"]), "noise[1]");
        assert_eq!(field_of(cliff, &["trials=0"]), "trials");
        assert_eq!(field_of(cliff, &["algorithms=[\"ane\"]"]), "algorithms");
        assert_eq!(
            field_of(cliff, &["grounding.max_iterations=0"]),
            "grounding.max_iterations"
        );
        assert_eq!(
            field_of(
                "experiment = \"cartpole-noisyreal\"",
                &["cmaes.population=2"]
            ),
            "cmaes.population"
        );
        assert_eq!(field_of("experiment = \"nope\"", &[]), "experiment");
        assert_eq!(field_of("", &[]), "experiment");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r = ExperimentConfig::from_toml("experiment = \"toy\"\nbogus = 1\n", &[]);
        assert!(matches!(r, Err(Error::Config { .. })));
    }
}
