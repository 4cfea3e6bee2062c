//! Action transformer, grounded simulator, and the grounding loop.

mod grounded;
mod loop_;
mod transformer;

pub use grounded::{GroundedEnv, RewardSource};
pub use loop_::{
    fit_grounded, ground_and_improve, ground_once, GroundingLoopConfig, GroundingOutcome,
    GroundingStep, IterationRecord, StopReason,
};
pub use transformer::{ActionTransformer, FallbackCounts};

use serde::{Deserialize, Serialize};

/// Deterministic (GAT) or sampled (SGAT) forward prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundingMode {
    Gat,
    Sgat,
}

impl GroundingMode {
    pub fn name(self) -> &'static str {
        match self {
            GroundingMode::Gat => "gat",
            GroundingMode::Sgat => "sgat",
        }
    }
}
