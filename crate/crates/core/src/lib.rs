//! Neural chains as discrete dynamical systems.
//!
//! The crate pairs two routes to the same 1-D dynamics: structured
//! finite-difference weight kernels ([`stencil`]) and physics-informed
//! networks trained from random initial weights ([`pinn`]). Both produce
//! layered weight files that the relaxation-form chain in [`chain`]
//! executes. [`reference`] supplies ground-truth solvers and [`analysis`]
//! the error norms and weight statistics used to compare them.

pub mod analysis;
pub mod autodiff;
pub mod chain;
pub mod error;
pub mod linalg;
pub mod pinn;
pub mod reference;
pub mod stencil;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
