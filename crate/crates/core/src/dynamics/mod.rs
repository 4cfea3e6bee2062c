//! Forward models of the target environment and inverse models of the
//! simulator.
//!
//! Forward models are fitted on real data only and inverse models on sim data
//! only; both fitting paths reject trajectories with the wrong provenance.

mod neural;
mod tabular;

pub use neural::{
    ForwardKind, InverseEncoding, NeuralFamily, NeuralForwardModel, NeuralInverseModel,
};
pub use tabular::{TabularFamily, TabularForwardModel, TabularInverseModel};

use crate::grounding::GroundingMode;
use crate::mdp::{Provenance, Trajectory};
use crate::rng::SimRng;
use crate::{Error, Result};

/// Approximates `f_real`.
pub trait ForwardModel<S, A>: Send + Sync {
    /// Point prediction: the most likely next state (tabular) or the mean
    /// (neural). `None` when the model has no data for `(s, a)`.
    fn predict(&self, state: &S, action: &A) -> Option<S>;

    /// Draw from the predicted next-state distribution.
    fn sample(&self, state: &S, action: &A, rng: &mut SimRng) -> Option<S>;
}

/// Approximates `f_sim^-1`.
pub trait InverseModel<S, A>: Send + Sync {
    /// The sim action taking `state` to `next`. `None` when `next` is not
    /// known to be reachable from `state`.
    fn invert(&self, state: &S, next: &S) -> Option<A>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FitDiagnostics {
    /// Final training loss (NaN for count-based models).
    pub loss: f64,
    pub transitions: usize,
}

/// How a grounding run builds its models.
pub trait ModelFamily<S, A>: Sync {
    type Forward: ForwardModel<S, A>;
    type Inverse: InverseModel<S, A>;

    fn fit_forward(
        &self,
        real: &[Trajectory<S, A>],
        mode: GroundingMode,
        seed: u64,
    ) -> Result<(Self::Forward, FitDiagnostics)>;

    fn fit_inverse(
        &self,
        sim: &[Trajectory<S, A>],
        seed: u64,
    ) -> Result<(Self::Inverse, FitDiagnostics)>;
}

pub(crate) fn require_source<S, A>(
    trajectories: &[Trajectory<S, A>],
    expected: Provenance,
) -> Result<usize> {
    if let Some(t) = trajectories.iter().find(|t| t.source != expected) {
        return Err(Error::Contract(format!(
            "expected {expected:?} trajectories, found {:?}",
            t.source
        )));
    }
    let n: usize = trajectories.iter().map(|t| t.transitions.len()).sum();
    if n == 0 {
        return Err(Error::NoData("no transitions to fit".into()));
    }
    Ok(n)
}
