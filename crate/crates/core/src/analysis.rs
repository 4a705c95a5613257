//! Error norms, generalized-normal weight fits, histograms and activation
//! traces.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chain::chain_run;
use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseMatrix;
use crate::pinn::{TrainedModel, WeightFile};

/// Smallest sample accepted by [`fit_generalized_normal`].
pub const MIN_FIT_SAMPLES: usize = 100;
/// Search interval for the shape parameter.
pub const BETA_RANGE: (f64, f64) = (0.5, 20.0);

/// Raw (unnormalized) error norms of `e = u − u_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub n_points: usize,
    pub eval_time: Option<f64>,
}

impl ErrorReport {
    pub fn at_time(mut self, t: f64) -> Self {
        self.eval_time = Some(t);
        self
    }

    /// Structured-text record.
    pub fn to_record(&self) -> String {
        let mut s = String::from("[error_report]\n");
        s += &format!("n_points = {}\n", self.n_points);
        if let Some(t) = self.eval_time {
            s += &format!("eval_time = {t:?}\n");
        }
        s += &format!("L1 = {:e}\nL2 = {:e}\nLinf = {:e}\n", self.l1, self.l2, self.linf);
        s
    }
}

pub fn error_norms(u: &[f64], u_ref: &[f64]) -> Result<ErrorReport> {
    check_dim("error_norms", u_ref.len(), u.len())?;
    if u.is_empty() {
        return Err(Error::Config("error norms need at least one point".into()));
    }
    let (mut l1, mut sq, mut linf) = (0.0, 0.0, 0.0f64);
    for (a, b) in u.iter().zip(u_ref) {
        let e = (a - b).abs();
        l1 += e;
        sq += e * e;
        linf = linf.max(e);
    }
    if !(l1.is_finite() && sq.is_finite()) {
        return Err(Error::Numerical("non-finite error vector".into()));
    }
    Ok(ErrorReport {
        l1,
        l2: sq.sqrt(),
        linf,
        n_points: u.len(),
        eval_time: None,
    })
}

/// Maximum-likelihood fit of `p(w) ∝ exp(−|(w − μ)/α|^β)` with `μ` fixed
/// at the sample mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenNormalFit {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub neg_log_likelihood: f64,
    pub n_samples: usize,
}

impl GenNormalFit {
    pub fn to_record(&self, label: &str) -> String {
        format!(
            "[gen_normal.{label}]\nn_samples = {}\nmu = {:e}\nalpha = {:e}\nbeta = {:?}\nneg_log_likelihood = {:?}\n",
            self.n_samples, self.mu, self.alpha, self.beta, self.neg_log_likelihood
        )
    }
}

/// Profiled scale and negative log-likelihood for one shape value.
/// Deviations are pre-divided by their maximum `scale` to keep `|d|^β` in range.
fn profile(dev: &[f64], scale: f64, beta: f64) -> (f64, f64) {
    let n = dev.len() as f64;
    let s: f64 = dev.iter().map(|d| d.powf(beta)).sum();
    let alpha = scale * (beta * s / n).powf(1.0 / beta);
    let nll = n * (std::f64::consts::LN_2 + alpha.ln() + libm::lgamma(1.0 + 1.0 / beta) + 1.0 / beta);
    (alpha, nll)
}

pub fn fit_generalized_normal(samples: &[f64]) -> Result<GenNormalFit> {
    let n = samples.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::Degenerate(format!("{n} samples; at least {MIN_FIT_SAMPLES} required")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite sample".into()));
    }
    let mu = samples.iter().sum::<f64>() / n as f64;
    let scale = samples.iter().map(|v| (v - mu).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Degenerate("all samples are equal".into()));
    }
    let dev: Vec<f64> = samples.iter().map(|v| (v - mu).abs() / scale).collect();
    let nll = |beta: f64| profile(&dev, scale, beta).1;

    // Coarse log-spaced scan brackets the minimum, golden section refines it.
    let (lo, hi) = (BETA_RANGE.0.ln(), BETA_RANGE.1.ln());
    let m = 48;
    let grid: Vec<f64> = (0..=m).map(|k| (lo + (hi - lo) * k as f64 / m as f64).exp()).collect();
    let best = (0..=m)
        .map(|k| (k, nll(grid[k])))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .expect("non-empty grid");
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(m)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (nll(c), nll(d));
    while b - a > 1e-9 * (1.0 + a.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = nll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = nll(d);
        }
    }
    let beta = 0.5 * (a + b);
    let (alpha, neg_log_likelihood) = profile(&dev, scale, beta);
    if !(alpha > 0.0 && neg_log_likelihood.is_finite()) {
        return Err(Error::Numerical("generalized-normal fit did not produce a finite likelihood".into()));
    }
    Ok(GenNormalFit {
        mu,
        alpha,
        beta,
        neg_log_likelihood,
        n_samples: n,
    })
}

/// Number of distinct values, used to flag stencil-like weight sets.
pub fn distinct_values(samples: &[f64]) -> usize {
    let mut v: Vec<u64> = samples.iter().map(|x| (x + 0.0).to_bits()).collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` equal-width edges from the minimum to the maximum.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(samples: &[f64], bins: usize) -> Result<Self> {
        if bins < 10 {
            return Err(Error::Config(format!("histograms need at least 10 bins, got {bins}")));
        }
        if samples.is_empty() || samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("histogram needs finite samples".into()));
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| if k == bins { hi } else { lo + k as f64 * width }).collect();
        let mut counts = vec![0; bins];
        for &v in samples {
            let k = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
            counts[k] += 1;
        }
        Ok(Self { edges, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Midpoint of the most populated bin.
    pub fn mode_center(&self) -> f64 {
        let k = (0..self.counts.len()).max_by_key(|&k| (self.counts[k], std::cmp::Reverse(k))).unwrap_or(0);
        0.5 * (self.edges[k] + self.edges[k + 1])
    }

    /// CSV rows `layer,bin_lo,bin_hi,count`.
    pub fn write_csv<W: Write>(&self, layer: usize, mut out: W, header: bool) -> Result<()> {
        if header {
            writeln!(out, "layer,bin_lo,bin_hi,count")?;
        }
        for (k, c) in self.counts.iter().enumerate() {
            writeln!(out, "{layer},{:?},{:?},{c}", self.edges[k], self.edges[k + 1])?;
        }
        Ok(())
    }
}

/// Histogram of the weight matrix of layer `layer` (0-based).
pub fn weight_histogram(model: &TrainedModel, layer: usize, bins: usize) -> Result<Histogram> {
    if layer >= model.params.num_layers() {
        return Err(Error::Config(format!(
            "layer {layer} out of range; the model has {} layers",
            model.params.num_layers()
        )));
    }
    Histogram::new(model.params.weight_slice(layer)?, bins)
}

/// Post-activation values of every layer for a list of inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    pub labels: Vec<String>,
    /// One `neurons × inputs` matrix per label.
    pub layers: Vec<DenseMatrix>,
}

impl ActivationTrace {
    pub fn n_inputs(&self) -> usize {
        self.layers.first().map_or(0, DenseMatrix::cols)
    }

    /// CSV rows `layer,neuron,input,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "layer,neuron,input,value")?;
        for (label, m) in self.labels.iter().zip(&self.layers) {
            for r in 0..m.rows() {
                for (c, v) in m.row(r).iter().enumerate() {
                    writeln!(out, "{label},{r},{c},{v:?}")?;
                }
            }
        }
        Ok(())
    }
}

/// Runs the model as a chain (`ω = 1`) on each `(x, t)` input.
pub fn activation_trace(model: &TrainedModel, inputs: &[(f64, f64)]) -> Result<ActivationTrace> {
    if inputs.is_empty() {
        return Err(Error::Config("activation trace needs at least one input".into()));
    }
    let chain = WeightFile::from_model(model)?.to_chain(1.0)?;
    let sizes = model.params.layer_sizes();
    let mut layers: Vec<DenseMatrix> = sizes.iter().map(|&n| DenseMatrix::zeros(n, inputs.len())).collect();
    for (c, &(x, t)) in inputs.iter().enumerate() {
        let (_, trace) = chain_run(&[x, t], &chain, true)?;
        let trace = trace.expect("trace requested");
        layers[0].set(0, c, x);
        layers[0].set(1, c, t);
        for (l, z) in trace.layers.iter().enumerate() {
            for (r, &v) in z.iter().enumerate() {
                layers[l + 1].set(r, c, v);
            }
        }
    }
    let hidden = sizes.len() - 2;
    let mut labels = vec!["input".to_string()];
    labels.extend((1..=hidden).map(|l| format!("hidden{l}")));
    labels.push("output".into());
    Ok(ActivationTrace { labels, layers })
}

/// Layerwise mean `|a − b|`. Not invariant under neuron permutation.
pub fn run_variability(a: &ActivationTrace, b: &ActivationTrace) -> Result<Vec<f64>> {
    check_dim("run_variability layers", a.layers.len(), b.layers.len())?;
    a.layers
        .iter()
        .zip(&b.layers)
        .map(|(ma, mb)| {
            check_dim("run_variability rows", ma.rows(), mb.rows())?;
            check_dim("run_variability inputs", ma.cols(), mb.cols())?;
            let n = ma.entries().len() as f64;
            Ok(ma.entries().iter().zip(mb.entries()).map(|(x, y)| (x - y).abs()).sum::<f64>() / n)
        })
        .collect()
}
