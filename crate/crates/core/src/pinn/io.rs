//! Layered weight files shared by trained networks and FD-built chains.
//!
//! The file is a JSON document:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "problem": { ... },            // optional, trained networks only
//!   "init_seed": 7,                // optional
//!   "layer_sizes": [2, 20, 20, 1],
//!   "layers": [
//!     { "activation": "tanh", "bias_sign": 1,
//!       "weights": [ row-major ], "bias": [ ... ] },
//!     ...
//!   ]
//! }
//! ```
//!
//! Reals are written with 17 significant digits, so export followed by
//! import is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::problem::ProblemSpec;
use super::train::TrainedModel;
use crate::autodiff::{Activation, MlpSpec, ParameterSet};
use crate::chain::{BiasSign, ChainConfig, LayerSpec};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub activation: Activation,
    pub bias_sign: BiasSign,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub format_version: u32,
    #[serde(default)]
    pub problem: Option<ProblemSpec>,
    #[serde(default)]
    pub init_seed: Option<u64>,
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<LayerRecord>,
}

fn parse_err(layer: Option<usize>, message: impl Into<String>) -> Error {
    Error::Parse {
        layer,
        message: message.into(),
    }
}

impl WeightFile {
    pub fn from_model(model: &TrainedModel) -> Result<Self> {
        let spec = &model.spec;
        let layers = (0..spec.num_layers())
            .map(|l| {
                Ok(LayerRecord {
                    activation: spec.activation(l),
                    bias_sign: BiasSign::Plus,
                    weights: model.params.weight_slice(l)?.to_vec(),
                    bias: model.params.bias(l)?.to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            format_version: FORMAT_VERSION,
            problem: Some(model.problem.clone()),
            init_seed: Some(spec.init_seed),
            layer_sizes: spec.layer_sizes.clone(),
            layers,
        })
    }

    pub fn from_chain(chain: &ChainConfig) -> Self {
        let mut layer_sizes = vec![chain.input_dim()];
        layer_sizes.extend(chain.layers.iter().map(|l| l.output_dim()));
        Self {
            format_version: FORMAT_VERSION,
            problem: None,
            init_seed: None,
            layer_sizes,
            layers: chain
                .layers
                .iter()
                .map(|l| LayerRecord {
                    activation: l.activation,
                    bias_sign: l.bias_sign,
                    weights: l.weights.entries().to_vec(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }

    /// Checks the version, layer shapes and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(parse_err(
                None,
                format!("unsupported format_version {} (expected {FORMAT_VERSION})", self.format_version),
            ));
        }
        if self.layer_sizes.len() != self.layers.len() + 1 {
            return Err(parse_err(
                None,
                format!(
                    "{} layer sizes cannot describe {} layers",
                    self.layer_sizes.len(),
                    self.layers.len()
                ),
            ));
        }
        if self.layers.is_empty() {
            return Err(parse_err(None, "no layers"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            let (n_in, n_out) = (self.layer_sizes[i], self.layer_sizes[i + 1]);
            if l.weights.len() != n_in * n_out {
                return Err(parse_err(
                    Some(i),
                    format!("expected {n_out}x{n_in} = {} weights, found {}", n_in * n_out, l.weights.len()),
                ));
            }
            if l.bias.len() != n_out {
                return Err(parse_err(Some(i), format!("expected {n_out} biases, found {}", l.bias.len())));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(parse_err(Some(i), "non-finite value"));
            }
        }
        Ok(())
    }

    pub fn to_chain(&self, omega: f64) -> Result<ChainConfig> {
        self.validate()?;
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let w = DenseMatrix::from_row_major(self.layer_sizes[i + 1], self.layer_sizes[i], l.weights.clone())?;
                LayerSpec::new(w, l.bias.clone(), l.activation, l.bias_sign)
            })
            .collect::<Result<Vec<_>>>()?;
        ChainConfig::new(layers, omega)
    }

    pub fn to_model(&self) -> Result<TrainedModel> {
        self.validate()?;
        let problem = self
            .problem
            .clone()
            .ok_or_else(|| parse_err(None, "no problem recorded; not a trained network"))?;
        if let Some(i) = self.layers.iter().position(|l| l.bias_sign != BiasSign::Plus) {
            return Err(parse_err(Some(i), "trained networks use bias_sign +1"));
        }
        let n = self.layers.len();
        let hidden = if n > 1 { self.layers[0].activation } else { Activation::Identity };
        for (i, l) in self.layers.iter().enumerate() {
            let expect = if i + 1 == n { Activation::Identity } else { hidden };
            if l.activation != expect {
                return Err(parse_err(Some(i), format!("activation {} breaks the network pattern", l.activation)));
            }
        }
        let spec = MlpSpec::new(self.layer_sizes.clone(), hidden, self.init_seed.unwrap_or(0));
        spec.validate().map_err(|e| parse_err(None, e.to_string()))?;
        let flat = self
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect();
        let params = ParameterSet::from_flat(&self.layer_sizes, flat)?;
        TrainedModel::from_params(spec, params, problem)
    }

    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"format_version\": {},", self.format_version);
        if let Some(p) = &self.problem {
            let _ = writeln!(s, "  \"problem\": {},", serde_json::to_string(p).expect("plain struct"));
        }
        if let Some(seed) = self.init_seed {
            let _ = writeln!(s, "  \"init_seed\": {seed},");
        }
        let sizes: Vec<String> = self.layer_sizes.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "  \"layer_sizes\": [{}],", sizes.join(", "));
        s.push_str("  \"layers\": [\n");
        for (i, l) in self.layers.iter().enumerate() {
            let cols = self.layer_sizes.get(i).copied().unwrap_or(1).max(1);
            s.push_str("    {\n");
            let _ = writeln!(s, "      \"activation\": \"{}\",", l.activation);
            let _ = writeln!(s, "      \"bias_sign\": {},", i8::from(l.bias_sign));
            s.push_str("      \"weights\": [");
            write_reals(&mut s, &l.weights, cols);
            s.push_str("],\n      \"bias\": [");
            write_reals(&mut s, &l.bias, usize::MAX);
            s.push_str("]\n    }");
            s.push_str(if i + 1 < self.layers.len() { ",\n" } else { "\n" });
        }
        s.push_str("  ]\n}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WeightFile = serde_json::from_str(text).map_err(|e| parse_err(None, e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// 17 significant digits, one matrix row per line.
fn write_reals(s: &mut String, values: &[f64], per_line: usize) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            s.push(',');
            if k % per_line == 0 {
                s.push_str("\n        ");
            } else {
                s.push(' ');
            }
        }
        let _ = write!(s, "{v:.16e}");
    }
}

pub fn export_weights(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    WeightFile::from_model(model)?.write(path)
}

pub fn import_weights(path: impl AsRef<Path>) -> Result<TrainedModel> {
    WeightFile::read(path)?.to_model()
}

pub fn import_chain(path: impl AsRef<Path>, omega: f64) -> Result<ChainConfig> {
    WeightFile::read(path)?.to_chain(omega)
}
