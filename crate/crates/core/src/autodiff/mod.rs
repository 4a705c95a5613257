//! Dense forward/reverse differentiation for small MLPs.
//!
//! Inputs carry second-order jets forward; parameters receive gradients by
//! reverse accumulation over a batched tape.

pub mod adam;
pub mod check;
pub mod dual;
pub mod mlp;
pub mod params;
pub mod tape;

pub use adam::{adam_step, AdamState};
pub use check::finite_diff_check;
pub use dual::{dual_activation, dual_add, dual_mul, dual_scale, Activation, Dual2Scalar};
pub use mlp::{mlp_forward_dual, mlp_forward_jet, mlp_forward_values};
pub use params::{MlpSpec, ParamBlock, ParamKind, ParameterSet};
pub use tape::{backprop_params, Channel, Channels, JetBatch, NodeId, Tape};
