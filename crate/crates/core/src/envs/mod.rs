//! Paired simulator / "real" environments.

pub mod cartpole;
pub mod cliff;
pub mod toy;

pub use cartpole::{CartPole, CartPoleParams};
pub use cliff::{CliffAction, CliffWorld, CliffWorldParams};
pub use toy::ToyMdp;
