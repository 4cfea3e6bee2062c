//! Policy improvement: exact tabular policy iteration and CMA-ES.

mod cmaes;
mod iteration;

pub use cmaes::{cmaes_optimize, CmaesConfig, CmaesImprover, CmaesResult, Generation};
pub use iteration::{
    policy_iteration, PolicyIterationConfig, PolicyIterationImprover, PolicyIterationResult,
};

use crate::mdp::{Env, Policy};
use crate::Result;

/// Improves a policy inside an environment, typically a grounded simulator.
pub trait PolicyImprover<E: Env>: Sync {
    type Policy: Policy<E::State, E::Action> + Clone;

    fn improve(&self, env: &E, current: &Self::Policy, seed: u64) -> Result<Self::Policy>;
}
