//! PDE residuals built from the network's jet output.

use super::problem::{ProblemKind, ProblemSpec};
use crate::autodiff::{mlp_forward_dual, Channel, Channels, Dual2Scalar, MlpSpec, NodeId, ParameterSet, Tape};
use crate::error::Result;

/// Smoothing of `|u_x|` on the training path.
pub const ABS_SMOOTHING: f64 = 1e-8;

/// Derivative channels a residual consumes.
pub fn residual_channels(kind: ProblemKind) -> Channels {
    match kind {
        ProblemKind::ViscousBurgers => Channels::ALL,
        ProblemKind::InviscidBurgers | ProblemKind::Eikonal => Channels::FIRST_ORDER,
    }
}

/// Records the residual vector for a width-1 output jet `u`.
pub fn record_residual(tape: &mut Tape, problem: &ProblemSpec, u: NodeId) -> Result<NodeId> {
    let ut = tape.component(u, Channel::Dt)?;
    let ux = tape.component(u, Channel::Dx)?;
    match problem.kind {
        ProblemKind::ViscousBurgers | ProblemKind::InviscidBurgers => {
            let uv = tape.component(u, Channel::Value)?;
            let adv = tape.mul(uv, ux)?;
            let r = tape.add(ut, adv)?;
            if problem.kind == ProblemKind::ViscousBurgers {
                let uxx = tape.component(u, Channel::Dxx)?;
                let visc = tape.scale(uxx, -problem.nu)?;
                tape.add(r, visc)
            } else {
                Ok(r)
            }
        }
        ProblemKind::Eikonal => {
            let neg_ut = tape.scale(ut, -1.0)?;
            let abs_ux = tape.abs(ux, ABS_SMOOTHING)?;
            let s = tape.add(neg_ut, abs_ux)?;
            tape.shift(s, -1.0)
        }
    }
}

/// Residual from an already evaluated jet; `smooth_abs` selects the
/// training-path `|·|`, otherwise the exact absolute value is used.
pub fn residual_from_jet(problem: &ProblemSpec, u: Dual2Scalar, smooth_abs: bool) -> f64 {
    match problem.kind {
        ProblemKind::ViscousBurgers => u.dt + u.v * u.dx - problem.nu * u.dxx,
        ProblemKind::InviscidBurgers => u.dt + u.v * u.dx,
        ProblemKind::Eikonal => {
            let a = if smooth_abs {
                (u.dx * u.dx + ABS_SMOOTHING * ABS_SMOOTHING).sqrt() - ABS_SMOOTHING
            } else {
                u.dx.abs()
            };
            -u.dt + a - 1.0
        }
    }
}

fn pointwise(params: &ParameterSet, spec: &MlpSpec, problem: &ProblemSpec, x: f64, t: f64) -> Result<f64> {
    let mut tape = Tape::new(params);
    let (_, u) = mlp_forward_dual(&mut tape, spec, x, t)?;
    Ok(residual_from_jet(problem, u, false))
}

/// `u_t + u u_x − ν u_xx` at `(x, t)`.
pub fn residual_viscous_burgers(params: &ParameterSet, spec: &MlpSpec, point: (f64, f64), nu: f64) -> Result<f64> {
    let problem = ProblemSpec {
        nu,
        ..ProblemSpec::viscous_burgers()
    };
    pointwise(params, spec, &problem, point.0, point.1)
}

/// `u_t + u u_x` at `(x, t)`.
pub fn residual_inviscid_burgers(params: &ParameterSet, spec: &MlpSpec, point: (f64, f64)) -> Result<f64> {
    pointwise(params, spec, &ProblemSpec::inviscid_burgers(), point.0, point.1)
}

/// `−u_t + |u_x| − 1` at `(x, t)` with the exact absolute value.
pub fn residual_eikonal(params: &ParameterSet, spec: &MlpSpec, point: (f64, f64)) -> Result<f64> {
    pointwise(params, spec, &ProblemSpec::eikonal(), point.0, point.1)
}
