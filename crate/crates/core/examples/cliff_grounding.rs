//! Grounds a slip-free Cliff Walking simulator against a slippery target and
//! compares the two grounding modes.

use sgat::dynamics::TabularFamily;
use sgat::envs::{CliffWorld, CliffWorldParams};
use sgat::grounding::{ground_and_improve, GroundingLoopConfig, GroundingMode};
use sgat::mdp::TabularModelSource;
use sgat::policy_opt::{policy_iteration, PolicyIterationImprover};

fn main() -> sgat::Result<()> {
    let sim = CliffWorld::new(CliffWorldParams::with_slip(0.0))?.tabular_model();
    let real = CliffWorld::new(CliffWorldParams::with_slip(0.3))?;
    let family = TabularFamily {
        num_states: sim.num_states(),
        num_actions: sim.num_actions(),
    };
    for mode in [GroundingMode::Gat, GroundingMode::Sgat] {
        let initial = policy_iteration(&sim, &Default::default())?.policy;
        let outcome = ground_and_improve(
            &GroundingLoopConfig::default(),
            mode,
            &sim,
            &real,
            &family,
            &PolicyIterationImprover::default(),
            initial,
            7,
        )?;
        let best = outcome.best_record();
        println!(
            "{}: best real return {:.2} ± {:.2} after {} iterations",
            mode.name(),
            best.real.mean_return,
            best.real.std_error,
            outcome.iterations.len()
        );
    }
    Ok(())
}
