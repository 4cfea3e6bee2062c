//! Simulator grounding for sim-to-real transfer.
//!
//! A deterministic simulator is wrapped by an *action transformer*
//! `g(s, a) = f_sim^-1(s, f_real(s, a))` built from a forward model of the
//! target ("real") environment and an inverse model of the simulator.
//! With a point-prediction forward model this is GAT; sampling the forward
//! model from a learned next-state distribution gives SGAT, which keeps the
//! target's stochasticity inside the grounded simulator.
//!
//! Layout:
//! - [`mdp`]: environment/policy contracts, trajectories, rollout and evaluation.
//! - [`envs`]: toy MDPs, Cliff Walking with slip noise, cart-pole.
//! - [`neural`]: small MLP with reverse-mode gradients, Gaussian NLL, Adam.
//! - [`dynamics`]: tabular and neural forward/inverse models.
//! - [`grounding`]: action transformer, grounded environment, grounding loop.
//! - [`policy_opt`]: policy iteration and CMA-ES.
//! - [`baselines`]: action-noise envelope.
//! - [`harness`]: experiment configs, orchestration, CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dynamics;
pub mod envs;
pub mod error;
pub mod grounding;
pub mod harness;
pub mod mdp;
pub mod neural;
pub mod policy_opt;
pub mod rng;

pub use error::{Error, Result};
