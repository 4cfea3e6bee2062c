use std::marker::PhantomData;
use std::sync::atomic::{AtomicU64, Ordering};

use super::GroundingMode;
use crate::dynamics::{ForwardModel, InverseModel};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FallbackCounts {
    /// `(s, a)` without forward-model data; the action passed through.
    pub forward_unseen: u64,
    /// Predicted `s'` the inverse model could not map; the action passed through.
    pub inverse_unreachable: u64,
}

/// `g(s, a) = f_sim^-1(s, f_real(s, a))`.
///
/// Missing model coverage never fails: the agent's action is passed through
/// unchanged and the event is counted.
pub struct ActionTransformer<S, A, F, I> {
    pub forward: F,
    pub inverse: I,
    pub mode: GroundingMode,
    forward_unseen: AtomicU64,
    inverse_unreachable: AtomicU64,
    _marker: PhantomData<fn(&S, &A)>,
}

impl<S, A, F, I> ActionTransformer<S, A, F, I>
where
    S: Clone,
    A: Clone,
    F: ForwardModel<S, A>,
    I: InverseModel<S, A>,
{
    pub fn new(forward: F, inverse: I, mode: GroundingMode) -> Self {
        Self {
            forward,
            inverse,
            mode,
            forward_unseen: AtomicU64::new(0),
            inverse_unreachable: AtomicU64::new(0),
            _marker: PhantomData,
        }
    }

    /// The transformed action `â`.
    pub fn transform_action(&self, state: &S, action: &A, rng: &mut SimRng) -> A {
        let predicted = match self.mode {
            GroundingMode::Gat => self.forward.predict(state, action),
            GroundingMode::Sgat => self.forward.sample(state, action, rng),
        };
        let Some(next) = predicted else {
            self.forward_unseen.fetch_add(1, Ordering::Relaxed);
            return action.clone();
        };
        self.invert_or_pass(state, &next, action)
    }

    pub(crate) fn invert_or_pass(&self, state: &S, next: &S, action: &A) -> A {
        match self.inverse.invert(state, next) {
            Some(a) => a,
            None => {
                self.inverse_unreachable.fetch_add(1, Ordering::Relaxed);
                action.clone()
            }
        }
    }

    pub(crate) fn note_unseen(&self) {
        self.forward_unseen.fetch_add(1, Ordering::Relaxed);
    }

    pub fn fallbacks(&self) -> FallbackCounts {
        FallbackCounts {
            forward_unseen: self.forward_unseen.load(Ordering::Relaxed),
            inverse_unreachable: self.inverse_unreachable.load(Ordering::Relaxed),
        }
    }

    pub fn reset_fallbacks(&self) {
        self.forward_unseen.store(0, Ordering::Relaxed);
        self.inverse_unreachable.store(0, Ordering::Relaxed);
    }
}
