//! Adam training loop.

use std::time::Instant;

use log::{debug, info};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::collocation::sample_collocation;
use super::loss::{total_loss, LossWeights};
use super::problem::ProblemSpec;
use crate::autodiff::{adam_step, mlp_forward_values, AdamState, MlpSpec, ParameterSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    /// Initial Adam learning rate.
    pub lr: f64,
    /// Learning rate reached at the last step by exponential decay;
    /// `None` keeps `lr` constant.
    #[serde(default)]
    pub lr_final: Option<f64>,
    #[serde(default)]
    pub weights: LossWeights,
    /// Interior points drawn (without replacement) from the pool each step;
    /// `None` uses the full pool.
    #[serde(default)]
    pub batch: Option<usize>,
    pub n_interior: usize,
    pub n_condition: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.n_interior == 0 || self.n_condition == 0 {
            return Err(Error::Config("steps and point counts must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config("lr must be positive".into()));
        }
        if let Some(f) = self.lr_final {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Config("lr_final must be positive".into()));
            }
        }
        if self.batch == Some(0) {
            return Err(Error::Config("batch must be positive".into()));
        }
        self.weights.validate()
    }

    /// Learning rate used at (0-based) `step`.
    pub fn lr_at(&self, step: usize) -> f64 {
        match self.lr_final {
            Some(f) if self.steps > 1 => {
                let frac = step as f64 / (self.steps - 1) as f64;
                self.lr * (f / self.lr).powf(frac)
            }
            _ => self.lr,
        }
    }
}

/// A trained network with its loss history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: MlpSpec,
    pub params: ParameterSet,
    pub history: Vec<f64>,
    pub problem: ProblemSpec,
}

impl TrainedModel {
    /// Wraps parameters without training history.
    pub fn from_params(spec: MlpSpec, params: ParameterSet, problem: ProblemSpec) -> Result<Self> {
        spec.validate()?;
        spec.check_params(&params)?;
        Ok(Self {
            spec,
            params,
            history: Vec::new(),
            problem,
        })
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.history.last().copied()
    }
}

/// Trains `mlp` on `problem` with Adam. Deterministic per
/// `(mlp.init_seed, cfg.seed)`.
pub fn train(problem: &ProblemSpec, mlp: &MlpSpec, cfg: &TrainConfig) -> Result<TrainedModel> {
    problem.validate()?;
    mlp.validate()?;
    cfg.validate()?;
    let colloc = sample_collocation(problem, cfg.n_interior, cfg.n_condition, cfg.seed)?;
    let mut params = mlp.init_params();
    let mut adam = AdamState::new(params.len(), cfg.lr);
    let mut batch_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut history = Vec::with_capacity(cfg.steps);
    let mut batch_points = Vec::new();
    let started = Instant::now();
    let log_every = (cfg.steps / 20).max(1);
    for step in 0..cfg.steps {
        let interior: &[(f64, f64)] = match cfg.batch {
            Some(b) if b < colloc.interior.len() => {
                batch_points.clear();
                batch_points.extend(
                    sample(&mut batch_rng, colloc.interior.len(), b)
                        .into_iter()
                        .map(|i| colloc.interior[i]),
                );
                &batch_points
            }
            _ => &colloc.interior,
        };
        let tape = total_loss(&params, mlp, problem, &colloc, interior, &cfg.weights)
            .map_err(|e| diverged(step, e))?;
        let loss = tape.output_value()?;
        let grads = tape.backprop_params(1.0).map_err(|e| diverged(step, e))?;
        adam.lr = cfg.lr_at(step);
        adam_step(&mut params, &grads, &mut adam).map_err(|e| diverged(step, e))?;
        history.push(loss);
        if step % log_every == 0 || step + 1 == cfg.steps {
            info!(
                "{} step {step}/{} loss {loss:.3e} lr {:.2e} ({:.1}s)",
                problem.kind,
                cfg.steps,
                adam.lr,
                started.elapsed().as_secs_f64()
            );
        }
    }
    if !params.is_finite() {
        return Err(Error::Numerical("training produced non-finite parameters".into()));
    }
    debug!("trained {} parameters in {:.1}s", params.len(), started.elapsed().as_secs_f64());
    Ok(TrainedModel {
        spec: mlp.clone(),
        params,
        history,
        problem: problem.clone(),
    })
}

fn diverged(step: usize, e: Error) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(format!("training diverged at step {step}: {msg}")),
        other => other,
    }
}

/// Plain forward evaluation of a trained model at `(x, t)`.
pub fn pinn_predict(model: &TrainedModel, x: f64, t: f64) -> Result<f64> {
    Ok(mlp_forward_values(&model.params, &model.spec, &[(x, t)])?[0])
}

/// Batched [`pinn_predict`].
pub fn pinn_predict_batch(model: &TrainedModel, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    mlp_forward_values(&model.params, &model.spec, points)
}
