//! Flat trainable parameter vectors and the MLP shape that owns them.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dual::Activation;
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Weight,
    Bias,
}

/// One contiguous block of the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub layer: usize,
    pub kind: ParamKind,
    pub offset: usize,
    /// `(rows, cols)`; biases are `(len, 1)`.
    pub shape: (usize, usize),
}

impl ParamBlock {
    pub fn len(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Weights and biases of a layered network packed into one vector.
///
/// Layer `l` owns a weight block `(n_{l+1} × n_l)` followed by its bias block.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    flat: Vec<f64>,
    layout: Vec<ParamBlock>,
}

impl ParameterSet {
    /// Zero parameters for the given layer widths.
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        let mut layout = Vec::with_capacity(2 * layer_sizes.len().saturating_sub(1));
        let mut offset = 0;
        for (layer, w) in layer_sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            layout.push(ParamBlock {
                layer,
                kind: ParamKind::Weight,
                offset,
                shape: (n_out, n_in),
            });
            offset += n_out * n_in;
            layout.push(ParamBlock {
                layer,
                kind: ParamKind::Bias,
                offset,
                shape: (n_out, 1),
            });
            offset += n_out;
        }
        Self {
            flat: vec![0.0; offset],
            layout,
        }
    }

    pub fn from_flat(layer_sizes: &[usize], flat: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(layer_sizes);
        check_dim("ParameterSet::from_flat", p.flat.len(), flat.len())?;
        p.flat = flat;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn num_layers(&self) -> usize {
        self.layout.len() / 2
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn layout(&self) -> &[ParamBlock] {
        &self.layout
    }

    pub fn block(&self, layer: usize, kind: ParamKind) -> Result<ParamBlock> {
        let idx = 2 * layer + usize::from(kind == ParamKind::Bias);
        self.layout
            .get(idx)
            .copied()
            .ok_or_else(|| Error::Config(format!("no layer {layer} in parameter set")))
    }

    /// `(n_out, n_in)` of layer `l`.
    pub fn layer_shape(&self, layer: usize) -> Result<(usize, usize)> {
        Ok(self.block(layer, ParamKind::Weight)?.shape)
    }

    pub fn weight(&self, layer: usize) -> Result<ArrayView2<'_, f64>> {
        let b = self.block(layer, ParamKind::Weight)?;
        Ok(ArrayView2::from_shape(b.shape, &self.flat[b.range()]).expect("layout is consistent"))
    }

    pub fn weight_slice(&self, layer: usize) -> Result<&[f64]> {
        let b = self.block(layer, ParamKind::Weight)?;
        Ok(&self.flat[b.range()])
    }

    pub fn bias(&self, layer: usize) -> Result<&[f64]> {
        let b = self.block(layer, ParamKind::Bias)?;
        Ok(&self.flat[b.range()])
    }

    pub fn slice(&self, block: &ParamBlock) -> &[f64] {
        &self.flat[block.range()]
    }

    pub fn slice_mut(&mut self, block: &ParamBlock) -> &mut [f64] {
        &mut self.flat[block.range()]
    }

    /// Layer widths implied by the layout.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.num_layers() + 1);
        for b in self.layout.iter().filter(|b| b.kind == ParamKind::Weight) {
            if sizes.is_empty() {
                sizes.push(b.shape.1);
            }
            sizes.push(b.shape.0);
        }
        sizes
    }

    /// Blocks are contiguous, non-overlapping and cover `flat` exactly.
    pub fn layout_is_consistent(&self) -> bool {
        let mut expect = 0;
        for b in &self.layout {
            if b.offset != expect {
                return false;
            }
            expect += b.len();
        }
        expect == self.flat.len()
    }

    pub fn is_finite(&self) -> bool {
        self.flat.iter().all(|v| v.is_finite())
    }
}

/// Shape and activations of a fully connected `(x, t) → u` network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    #[serde(default = "identity")]
    pub output_activation: Activation,
    pub init_seed: u64,
}

fn identity() -> Activation {
    Activation::Identity
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, hidden_activation: Activation, init_seed: u64) -> Self {
        Self {
            layer_sizes,
            hidden_activation,
            output_activation: Activation::Identity,
            init_seed,
        }
    }

    /// `[2, width × depth, 1]`.
    pub fn uniform(depth: usize, width: usize, hidden_activation: Activation, init_seed: u64) -> Self {
        let mut sizes = vec![2];
        sizes.extend(std::iter::repeat(width).take(depth));
        sizes.push(1);
        Self::new(sizes, hidden_activation, init_seed)
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len().saturating_sub(1)
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.layer_sizes;
        if s.len() < 2 {
            return Err(Error::Config("an MLP needs at least input and output sizes".into()));
        }
        if s[0] != 2 || s[s.len() - 1] != 1 {
            return Err(Error::Config(format!(
                "layer sizes must start with 2 (x, t) and end with 1 (u), got {s:?}"
            )));
        }
        if s.contains(&0) {
            return Err(Error::Config("zero-width layer".into()));
        }
        if self.output_activation != Activation::Identity {
            return Err(Error::Config("output activation must be identity".into()));
        }
        Ok(())
    }

    pub fn check_params(&self, params: &ParameterSet) -> Result<()> {
        if params.layer_sizes() != self.layer_sizes {
            return Err(Error::Config(format!(
                "parameter layout {:?} does not match layer sizes {:?}",
                params.layer_sizes(),
                self.layer_sizes
            )));
        }
        Ok(())
    }

    /// Weights and biases uniform on `±sqrt(6/(n_in+n_out))` of their layer.
    pub fn init_params(&self) -> ParameterSet {
        let mut params = ParameterSet::zeros(&self.layer_sizes);
        let mut rng = ChaCha8Rng::seed_from_u64(self.init_seed);
        let blocks: Vec<ParamBlock> = params.layout().to_vec();
        for b in &blocks {
            let (n_out, n_in) = params.layer_shape(b.layer).expect("layer from layout");
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            for w in params.slice_mut(b) {
                *w = rng.random_range(-limit..=limit);
            }
        }
        params
    }
}
