//! Feed-forward networks for the continuous dynamics models.
//!
//! Parameters live in one flat vector so that gradients and optimizer state
//! share its layout. Gradients are exact reverse-mode derivatives of a
//! per-row loss closure that maps network output to `(loss, dloss/doutput)`.

mod adam;
pub(crate) mod checkpoint;
mod loss;
mod mlp;
mod train;

pub use adam::{Adam, AdamConfig};
pub use loss::{gaussian_nll, gaussian_nll_grad, mse, mse_grad, GaussianHead, GaussianHeadOutput};
pub use mlp::{Activation, Mlp};
pub use train::{fit, LossKind, Standardizer, TrainConfig, TrainReport};
