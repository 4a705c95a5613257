//! Neural chains as discrete dynamical systems in relaxation form.
//!
//! Each layer defines a local attractor `z_att = f(W z + s·b)` (with the
//! bias sign `s` recorded per layer), and one step of the chain relaxes
//! the signal towards it:
//!
//! ```text
//! z' = (1 − ω) z + ω z_att
//! ```
//!
//! `ω = 1` is a plain feed-forward layer, `ω = 0` the identity propagator,
//! `ω ∈ (1, 2]` over-relaxation.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::autodiff::Activation;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{affine_rows, norm2, norm_inf, DenseMatrix};

/// Norm beyond which a fixed-point iteration is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;
/// Default fixed-point tolerance on `‖z − z_att‖∞`.
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-10;

/// Sign applied to the bias inside the attractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum BiasSign {
    /// `f(W z + b)`, the trained-network convention.
    Plus,
    /// `f(W z − b)`, the relaxation-form convention.
    Minus,
}

impl BiasSign {
    pub fn as_f64(self) -> f64 {
        match self {
            BiasSign::Plus => 1.0,
            BiasSign::Minus => -1.0,
        }
    }
}

impl From<BiasSign> for i8 {
    fn from(s: BiasSign) -> i8 {
        match s {
            BiasSign::Plus => 1,
            BiasSign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for BiasSign {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(BiasSign::Plus),
            -1 => Ok(BiasSign::Minus),
            other => Err(format!("bias_sign must be +1 or -1, got {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub bias_sign: BiasSign,
}

impl LayerSpec {
    pub fn new(weights: DenseMatrix, bias: Vec<f64>, activation: Activation, bias_sign: BiasSign) -> Result<Self> {
        check_dim("LayerSpec bias length", weights.rows(), bias.len())?;
        Ok(Self {
            weights,
            bias,
            activation,
            bias_sign,
        })
    }

    /// Linear layer `z ↦ W z` with zero bias.
    pub fn linear(weights: DenseMatrix) -> Self {
        let n = weights.rows();
        Self {
            weights,
            bias: vec![0.0; n],
            activation: Activation::Identity,
            bias_sign: BiasSign::Minus,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn is_square(&self) -> bool {
        self.weights.is_square()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub layers: Vec<LayerSpec>,
    pub omega: f64,
    /// Rescale the signal after every square step.
    pub normalize: bool,
    /// Norm to rescale to; `None` keeps the input norm.
    pub target_norm: Option<f64>,
}

impl ChainConfig {
    pub fn new(layers: Vec<LayerSpec>, omega: f64) -> Result<Self> {
        let cfg = Self {
            layers,
            omega,
            normalize: false,
            target_norm: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_normalization(mut self, target_norm: Option<f64>) -> Self {
        self.normalize = true;
        self.target_norm = target_norm;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Result<Self> {
        self.omega = omega;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_omega(self.omega)?;
        if self.layers.is_empty() {
            return Err(Error::Config("a chain needs at least one layer".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            check_dim("chain layer bias", l.output_dim(), l.bias.len())?;
            if self.omega != 1.0 && !l.is_square() {
                return Err(Error::Config(format!(
                    "layer {i} is {}x{}; relaxation with omega != 1 needs square layers",
                    l.output_dim(),
                    l.input_dim()
                )));
            }
            if i > 0 && self.layers[i - 1].output_dim() != l.input_dim() {
                return Err(Error::Config(format!(
                    "layer {i} expects {} inputs but layer {} produces {}",
                    l.input_dim(),
                    i - 1,
                    self.layers[i - 1].output_dim()
                )));
            }
        }
        if let Some(t) = self.target_norm {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config("target_norm must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&omega) {
        return Err(Error::Config(format!("omega must lie in [0, 2], got {omega}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub z: Vec<f64>,
    pub layer_index: usize,
}

impl ChainState {
    pub fn new(z: Vec<f64>) -> Self {
        Self { z, layer_index: 0 }
    }
}

/// Signal after every executed layer of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainTrace {
    pub layers: Vec<Vec<f64>>,
}

/// `f(W z + s·b)`.
pub fn attractor(z: &[f64], layer: &LayerSpec) -> Result<Vec<f64>> {
    check_dim("attractor input", layer.input_dim(), z.len())?;
    let zv = ArrayView2::from_shape((1, z.len()), z).expect("row vector");
    let a = affine_rows(zv, layer.weights.view(), Some((&layer.bias, layer.bias_sign.as_f64())));
    let f = layer.activation;
    Ok(a.iter().map(|&v| f.apply(v)).collect())
}

/// `z' = (1 − ω) z + ω z_att`.
pub fn chain_step(state: &ChainState, layer: &LayerSpec, omega: f64) -> Result<ChainState> {
    check_omega(omega)?;
    if omega != 1.0 && !layer.is_square() {
        return Err(Error::Config(format!(
            "relaxation with omega = {omega} needs a square layer, got {}x{}",
            layer.output_dim(),
            layer.input_dim()
        )));
    }
    let z = if omega == 0.0 {
        check_dim("chain_step input", layer.input_dim(), state.z.len())?;
        state.z.clone()
    } else {
        let att = attractor(&state.z, layer)?;
        if omega == 1.0 {
            att
        } else {
            state
                .z
                .iter()
                .zip(&att)
                .map(|(z, a)| (1.0 - omega) * z + omega * a)
                .collect()
        }
    };
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite signal after layer {}", state.layer_index)));
    }
    Ok(ChainState {
        z,
        layer_index: state.layer_index + 1,
    })
}

/// Runs every layer of `config` on `x`; optionally records the signal after
/// each layer.
pub fn chain_run(x: &[f64], config: &ChainConfig, want_trace: bool) -> Result<(Vec<f64>, Option<ChainTrace>)> {
    config.validate()?;
    check_dim("chain_run input", config.input_dim(), x.len())?;
    let target = if config.normalize {
        Some(match config.target_norm {
            Some(t) => t,
            None => norm2(x),
        })
    } else {
        None
    };
    let mut trace = want_trace.then(ChainTrace::default);
    let mut state = ChainState::new(x.to_vec());
    for layer in &config.layers {
        state = chain_step(&state, layer, config.omega)?;
        if let (Some(t), true) = (target, layer.is_square()) {
            state.z = normalize(&state.z, t)?;
        }
        if let Some(tr) = trace.as_mut() {
            tr.layers.push(state.z.clone());
        }
    }
    Ok((state.z, trace))
}

/// Outcome of [`fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointStatus {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub z: Vec<f64>,
    /// `‖z − z_att(z)‖∞` at the returned iterate.
    pub residual: f64,
    pub iterations: usize,
    pub status: FixedPointStatus,
}

impl FixedPoint {
    pub fn converged(&self) -> bool {
        self.status == FixedPointStatus::Converged
    }
}

/// Iterates [`chain_step`] with a single square layer until
/// `‖z − z_att‖∞ ≤ tol`, `max_iter` steps, or divergence.
pub fn fixed_point(layer: &LayerSpec, omega: f64, z0: &[f64], tol: f64, max_iter: usize) -> Result<FixedPoint> {
    if !layer.is_square() {
        return Err(Error::Config("fixed-point iteration needs a square layer".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    check_omega(omega)?;
    let mut state = ChainState::new(z0.to_vec());
    let mut residual = f64::INFINITY;
    for iter in 0..=max_iter {
        let att = attractor(&state.z, layer)?;
        residual = state
            .z
            .iter()
            .zip(&att)
            .fold(0.0_f64, |m, (z, a)| m.max((z - a).abs()));
        if residual <= tol {
            return Ok(FixedPoint {
                z: state.z,
                residual,
                iterations: iter,
                status: FixedPointStatus::Converged,
            });
        }
        if iter == max_iter {
            break;
        }
        let next = match chain_step(&state, layer, omega) {
            Ok(s) => s,
            Err(Error::Numerical(_)) => {
                return Ok(FixedPoint {
                    z: state.z,
                    residual,
                    iterations: iter,
                    status: FixedPointStatus::Diverged,
                })
            }
            Err(e) => return Err(e),
        };
        state = next;
        if !(norm_inf(&state.z) <= DIVERGENCE_NORM) {
            return Ok(FixedPoint {
                z: state.z,
                residual: f64::INFINITY,
                iterations: iter + 1,
                status: FixedPointStatus::Diverged,
            });
        }
    }
    Ok(FixedPoint {
        z: state.z,
        residual,
        iterations: max_iter,
        status: FixedPointStatus::MaxIterations,
    })
}

/// `‖(W_D − W_O) z*‖₂`; zero when `z*` lies in the null space of the
/// difference, i.e. both weight matrices share the fixed point.
pub fn degeneracy_residual(w_d: &DenseMatrix, w_o: &DenseMatrix, z_star: &[f64]) -> Result<f64> {
    if !w_d.is_square() || !w_o.is_square() {
        return Err(Error::Config("degeneracy check needs square matrices".into()));
    }
    let diff = w_d.sub(w_o)?;
    Ok(norm2(&diff.matvec(z_star)?))
}

/// `z · target / ‖z‖₂`.
pub fn normalize(z: &[f64], target: f64) -> Result<Vec<f64>> {
    let n = norm2(z);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Numerical("cannot rescale a zero or non-finite vector".into()));
    }
    let s = target / n;
    Ok(z.iter().map(|v| v * s).collect())
}
