//! Physics-informed networks for the viscous/inviscid Burgers and
//! backward eikonal problems.

pub mod collocation;
pub mod io;
pub mod loss;
pub mod problem;
pub mod residual;
pub mod train;

pub use crate::autodiff::MlpSpec;
pub use collocation::{sample_collocation, CollocationSet, ConditionGroup, ConditionPoint};
pub use io::{export_weights, import_chain, import_weights, WeightFile};
pub use loss::{total_loss, LossWeights};
pub use problem::{ConditionKind, ProblemKind, ProblemSpec};
pub use residual::{residual_eikonal, residual_inviscid_burgers, residual_viscous_burgers};
pub use train::{pinn_predict, pinn_predict_batch, train, TrainConfig, TrainedModel};
