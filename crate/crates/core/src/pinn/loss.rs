//! Composite physics-informed loss.

use serde::{Deserialize, Serialize};

use super::collocation::CollocationSet;
use super::problem::{ConditionKind, ProblemSpec};
use super::residual::{record_residual, residual_channels};
use crate::autodiff::{mlp_forward_jet, Channel, Channels, MlpSpec, NodeId, ParameterSet, Tape};
use crate::error::{Error, Result};

/// `λ_res`, `λ_ic` (initial or terminal slice) and `λ_bc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub residual: f64,
    pub initial: f64,
    pub boundary: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            residual: 1.0,
            initial: 1.0,
            boundary: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if [self.residual, self.initial, self.boundary]
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::Config("loss weights must be finite and non-negative".into()));
        }
        Ok(())
    }
}

fn mean_square_mismatch(tape: &mut Tape, spec: &MlpSpec, points: &[(f64, f64)], targets: Vec<f64>) -> Result<NodeId> {
    let u = mlp_forward_jet(tape, spec, points, Channels::VALUE_ONLY)?;
    let uv = tape.component(u, Channel::Value)?;
    let target = tape.constant(targets)?;
    let e = tape.sub(uv, target)?;
    let sq = tape.square(e)?;
    tape.mean(sq)
}

/// Records `λ_res·mean(r²) + λ_ic·mean((u−g)²) + λ_bc·mean((u−g)²)` and
/// finalizes the tape on it. Terms with zero weight are not recorded.
pub fn total_loss(
    params: &ParameterSet,
    spec: &MlpSpec,
    problem: &ProblemSpec,
    collocation: &CollocationSet,
    interior: &[(f64, f64)],
    weights: &LossWeights,
) -> Result<Tape> {
    weights.validate()?;
    let mut tape = Tape::new(params);
    let mut terms = Vec::new();
    if weights.residual > 0.0 {
        if interior.is_empty() {
            return Err(Error::Usage("no interior collocation points".into()));
        }
        let u = mlp_forward_jet(&mut tape, spec, interior, residual_channels(problem.kind))?;
        let r = record_residual(&mut tape, problem, u)?;
        let sq = tape.square(r)?;
        let m = tape.mean(sq)?;
        terms.push(tape.scale(m, weights.residual)?);
    }
    for group in &collocation.conditions {
        let w = match group.kind {
            ConditionKind::Initial | ConditionKind::Terminal => weights.initial,
            ConditionKind::Boundary => weights.boundary,
        };
        if w == 0.0 || group.points.is_empty() {
            continue;
        }
        let pts: Vec<(f64, f64)> = group.points.iter().map(|q| (q.x, q.t)).collect();
        let targets = group.points.iter().map(|q| q.target).collect();
        let m = mean_square_mismatch(&mut tape, spec, &pts, targets)?;
        terms.push(tape.scale(m, w)?);
    }
    let mut total = match terms.first() {
        Some(&t) => t,
        None => tape.constant(vec![0.0])?,
    };
    for &t in terms.iter().skip(1) {
        total = tape.add(total, t)?;
    }
    tape.finalize(total)?;
    let value = tape.output_value()?;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("loss evaluated to {value}")));
    }
    Ok(tape)
}
