//! Batched reverse-mode tape over second-order jets.
//!
//! Nodes hold either a [`JetBatch`] (one row per collocation point, one
//! column per neuron, with derivative channels in `x` and `t`) or a plain
//! vector. Recording evaluates each op immediately; [`Tape::replay`]
//! re-evaluates the same op list against a new parameter snapshot.
//! Reverse accumulation runs through the jets, so losses built from
//! `u`, `u_x`, `u_t`, `u_xx` get exact parameter gradients.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, Axis};

use super::dual::{Activation, Dual2Scalar};
use super::params::{ParamKind, ParameterSet};
use crate::error::{check_dim, Error, Result};
use crate::linalg::affine_rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Value,
    Dx,
    Dt,
    Dxx,
}

/// Which derivative channels a jet carries. `dxx` implies `dx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channels {
    pub dx: bool,
    pub dt: bool,
    pub dxx: bool,
}

impl Channels {
    pub const ALL: Channels = Channels {
        dx: true,
        dt: true,
        dxx: true,
    };
    pub const FIRST_ORDER: Channels = Channels {
        dx: true,
        dt: true,
        dxx: false,
    };
    pub const VALUE_ONLY: Channels = Channels {
        dx: false,
        dt: false,
        dxx: false,
    };

    fn normalized(self) -> Self {
        Channels {
            dx: self.dx || self.dxx,
            ..self
        }
    }

    fn has(self, c: Channel) -> bool {
        match c {
            Channel::Value => true,
            Channel::Dx => self.dx,
            Channel::Dt => self.dt,
            Channel::Dxx => self.dxx,
        }
    }
}

/// A batch of jets: `rows` points × `cols` features per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct JetBatch {
    pub v: Array2<f64>,
    pub dx: Option<Array2<f64>>,
    pub dt: Option<Array2<f64>>,
    pub dxx: Option<Array2<f64>>,
}

impl JetBatch {
    fn zeros_like(channels: Channels, rows: usize, cols: usize) -> Self {
        let z = || Array2::zeros((rows, cols));
        JetBatch {
            v: z(),
            dx: channels.dx.then(z),
            dt: channels.dt.then(z),
            dxx: channels.dxx.then(z),
        }
    }

    pub fn channels(&self) -> Channels {
        Channels {
            dx: self.dx.is_some(),
            dt: self.dt.is_some(),
            dxx: self.dxx.is_some(),
        }
    }

    pub fn rows(&self) -> usize {
        self.v.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.ncols()
    }

    pub fn channel(&self, c: Channel) -> Option<&Array2<f64>> {
        match c {
            Channel::Value => Some(&self.v),
            Channel::Dx => self.dx.as_ref(),
            Channel::Dt => self.dt.as_ref(),
            Channel::Dxx => self.dxx.as_ref(),
        }
    }

    fn channel_mut(&mut self, c: Channel) -> Option<&mut Array2<f64>> {
        match c {
            Channel::Value => Some(&mut self.v),
            Channel::Dx => self.dx.as_mut(),
            Channel::Dt => self.dt.as_mut(),
            Channel::Dxx => self.dxx.as_mut(),
        }
    }

    /// Jet of one entry; absent channels read as zero.
    pub fn get(&self, row: usize, col: usize) -> Dual2Scalar {
        let at = |a: &Option<Array2<f64>>| a.as_ref().map_or(0.0, |a| a[[row, col]]);
        Dual2Scalar::new(self.v[[row, col]], at(&self.dx), at(&self.dt), at(&self.dxx))
    }

    fn add_assign(&mut self, other: &JetBatch) {
        self.v += &other.v;
        for c in [Channel::Dx, Channel::Dt, Channel::Dxx] {
            if let (Some(a), Some(b)) = (self.channel_mut(c), other.channel(c)) {
                *a += b;
            }
        }
    }

    fn present(&self) -> impl Iterator<Item = (Channel, &Array2<f64>)> {
        [Channel::Value, Channel::Dx, Channel::Dt, Channel::Dxx]
            .into_iter()
            .filter_map(move |c| self.channel(c).map(|a| (c, a)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Jet(JetBatch),
    Vector(Vec<f64>),
}

impl Value {
    fn as_jet(&self) -> &JetBatch {
        match self {
            Value::Jet(j) => j,
            Value::Vector(_) => unreachable!("op kinds are checked at record time"),
        }
    }

    fn as_vec(&self) -> &[f64] {
        match self {
            Value::Vector(v) => v,
            Value::Jet(_) => unreachable!("op kinds are checked at record time"),
        }
    }

    fn add_assign(&mut self, other: Value) {
        match (self, other) {
            (Value::Jet(a), Value::Jet(b)) => a.add_assign(&b),
            (Value::Vector(a), Value::Vector(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            _ => unreachable!("adjoint kinds match their nodes"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    /// Seeded `(x, t)` inputs: `x` has `dx = 1`, `t` has `dt = 1`.
    Input {
        x: Vec<f64>,
        t: Vec<f64>,
        channels: Channels,
    },
    /// `Z Wᵀ + sign·b` using layer `layer` of the parameter set.
    Affine {
        input: usize,
        layer: usize,
        bias_sign: f64,
    },
    Activate {
        input: usize,
        f: Activation,
    },
    /// One channel of a width-1 jet, as a vector over points.
    Component {
        input: usize,
        channel: Channel,
    },
    Param {
        layer: usize,
        kind: ParamKind,
    },
    Constant(Vec<f64>),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Shift(usize, f64),
    Square(usize),
    /// `sqrt(a² + ε²) − ε`; `ε = 0` is the exact absolute value.
    Abs(usize, f64),
    Mean(usize),
}

/// Recorded computation with its parameter snapshot.
#[derive(Debug, Clone)]
pub struct Tape {
    params: ParameterSet,
    ops: Vec<Op>,
    values: Vec<Value>,
    output: Option<usize>,
}

impl Tape {
    pub fn new(params: &ParameterSet) -> Self {
        Self {
            params: params.clone(),
            ops: Vec::new(),
            values: Vec::new(),
            output: None,
        }
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Value {
        &self.values[id.0]
    }

    pub fn jet(&self, id: NodeId) -> Result<&JetBatch> {
        match &self.values[id.0] {
            Value::Jet(j) => Ok(j),
            Value::Vector(_) => Err(Error::Usage(format!("node {} is not a jet", id.0))),
        }
    }

    pub fn vector(&self, id: NodeId) -> Result<&[f64]> {
        match &self.values[id.0] {
            Value::Vector(v) => Ok(v),
            Value::Jet(_) => Err(Error::Usage(format!("node {} is not a vector", id.0))),
        }
    }

    pub fn scalar(&self, id: NodeId) -> Result<f64> {
        let v = self.vector(id)?;
        check_dim("Tape::scalar", 1, v.len())?;
        Ok(v[0])
    }

    pub fn output(&self) -> Option<NodeId> {
        self.output.map(NodeId)
    }

    /// Value of the finalized scalar output.
    pub fn output_value(&self) -> Result<f64> {
        let out = self
            .output
            .ok_or_else(|| Error::Usage("tape has not been finalized".into()))?;
        self.scalar(NodeId(out))
    }

    fn push(&mut self, op: Op) -> Result<NodeId> {
        let value = eval(&self.params, &self.values, &op)?;
        self.ops.push(op);
        self.values.push(value);
        Ok(NodeId(self.values.len() - 1))
    }

    fn expect_jet(&self, id: NodeId) -> Result<&JetBatch> {
        self.jet(id)
    }

    fn expect_vec(&self, id: NodeId) -> Result<usize> {
        Ok(self.vector(id)?.len())
    }

    fn same_len(&self, a: NodeId, b: NodeId) -> Result<()> {
        let (la, lb) = (self.expect_vec(a)?, self.expect_vec(b)?);
        check_dim("tape binary op", la, lb)
    }

    pub fn input(&mut self, points: &[(f64, f64)], channels: Channels) -> Result<NodeId> {
        if points.is_empty() {
            return Err(Error::Usage("empty input batch".into()));
        }
        let (x, t) = points.iter().copied().unzip();
        self.push(Op::Input {
            x,
            t,
            channels: channels.normalized(),
        })
    }

    pub fn affine(&mut self, input: NodeId, layer: usize, bias_sign: f64) -> Result<NodeId> {
        let (_, n_in) = self.params.layer_shape(layer)?;
        check_dim("Tape::affine input width", n_in, self.expect_jet(input)?.cols())?;
        self.push(Op::Affine {
            input: input.0,
            layer,
            bias_sign,
        })
    }

    pub fn activate(&mut self, input: NodeId, f: Activation) -> Result<NodeId> {
        self.expect_jet(input)?;
        if f == Activation::Identity {
            return Ok(input);
        }
        self.push(Op::Activate { input: input.0, f })
    }

    pub fn component(&mut self, input: NodeId, channel: Channel) -> Result<NodeId> {
        let j = self.expect_jet(input)?;
        check_dim("Tape::component width", 1, j.cols())?;
        if !j.channels().has(channel) {
            return Err(Error::Usage(format!("channel {channel:?} was not propagated")));
        }
        self.push(Op::Component {
            input: input.0,
            channel,
        })
    }

    pub fn param(&mut self, layer: usize, kind: ParamKind) -> Result<NodeId> {
        self.params.block(layer, kind)?;
        self.push(Op::Param { layer, kind })
    }

    pub fn constant(&mut self, values: Vec<f64>) -> Result<NodeId> {
        self.push(Op::Constant(values))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b)?;
        self.push(Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b)?;
        self.push(Op::Sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b)?;
        self.push(Op::Mul(a.0, b.0))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        self.expect_vec(a)?;
        self.push(Op::Scale(a.0, c))
    }

    pub fn shift(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        self.expect_vec(a)?;
        self.push(Op::Shift(a.0, c))
    }

    pub fn square(&mut self, a: NodeId) -> Result<NodeId> {
        self.expect_vec(a)?;
        self.push(Op::Square(a.0))
    }

    pub fn abs(&mut self, a: NodeId, eps: f64) -> Result<NodeId> {
        self.expect_vec(a)?;
        if eps < 0.0 {
            return Err(Error::Usage("negative abs smoothing".into()));
        }
        self.push(Op::Abs(a.0, eps))
    }

    pub fn mean(&mut self, a: NodeId) -> Result<NodeId> {
        if self.expect_vec(a)? == 0 {
            return Err(Error::Usage("mean of empty vector".into()));
        }
        self.push(Op::Mean(a.0))
    }

    /// Marks a length-1 vector node as the differentiated output.
    pub fn finalize(&mut self, output: NodeId) -> Result<()> {
        check_dim("Tape::finalize output length", 1, self.expect_vec(output)?)?;
        self.output = Some(output.0);
        Ok(())
    }

    /// Re-evaluates every op against `params`.
    pub fn replay(&self, params: &ParameterSet) -> Result<Tape> {
        if params.layout() != self.params.layout() {
            return Err(Error::Config("replay with a different parameter layout".into()));
        }
        let mut values = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = eval(params, &values, op)?;
            values.push(v);
        }
        Ok(Tape {
            params: params.clone(),
            ops: self.ops.clone(),
            values,
            output: self.output,
        })
    }

    /// `seed · ∂output/∂θ` for every parameter `θ`.
    pub fn backprop_params(&self, seed: f64) -> Result<Vec<f64>> {
        let out = self
            .output
            .ok_or_else(|| Error::Usage("backprop on an unfinalized tape".into()))?;
        let mut grad = vec![0.0; self.params.len()];
        let mut adj: Vec<Option<Value>> = vec![None; self.ops.len()];
        adj[out] = Some(Value::Vector(vec![seed]));
        for i in (0..=out).rev() {
            let Some(a) = adj[i].take() else { continue };
            self.backward_op(i, a, &mut adj, &mut grad)?;
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical("non-finite parameter gradient".into()));
        }
        Ok(grad)
    }

    fn needs_adjoint(&self, i: usize) -> bool {
        !matches!(self.ops[i], Op::Input { .. } | Op::Constant(_))
    }

    fn backward_op(
        &self,
        i: usize,
        adj_i: Value,
        adj: &mut [Option<Value>],
        grad: &mut [f64],
    ) -> Result<()> {
        let send = |adj: &mut [Option<Value>], to: usize, v: Value| {
            if !self.needs_adjoint(to) {
                return;
            }
            match &mut adj[to] {
                Some(a) => a.add_assign(v),
                slot @ None => *slot = Some(v),
            }
        };
        match &self.ops[i] {
            Op::Input { .. } | Op::Constant(_) => {}
            Op::Param { layer, kind } => {
                let b = self.params.block(*layer, *kind)?;
                for (g, a) in grad[b.range()].iter_mut().zip(adj_i.as_vec()) {
                    *g += a;
                }
            }
            Op::Affine {
                input,
                layer,
                bias_sign,
            } => {
                let a = match adj_i {
                    Value::Jet(j) => j,
                    Value::Vector(_) => unreachable!(),
                };
                let z = self.values[*input].as_jet();
                let w = self.params.weight(*layer)?;
                let wb = self.params.block(*layer, ParamKind::Weight)?;
                let bb = self.params.block(*layer, ParamKind::Bias)?;
                {
                    let mut gw =
                        ndarray::ArrayViewMut2::from_shape(wb.shape, &mut grad[wb.range()])
                            .expect("layout is consistent");
                    for (c, ac) in a.present() {
                        let zc = z.channel(c).expect("adjoint channels follow values");
                        general_mat_mul(1.0, &ac.t(), zc, 1.0, &mut gw);
                    }
                }
                let gb = &mut grad[bb.range()];
                for (g, s) in gb.iter_mut().zip(a.v.sum_axis(Axis(0))) {
                    *g += bias_sign * s;
                }
                if self.needs_adjoint(*input) {
                    let mut dz = JetBatch::zeros_like(a.channels(), z.rows(), z.cols());
                    for (c, ac) in a.present() {
                        let out = dz.channel_mut(c).expect("same channels");
                        general_mat_mul(1.0, ac, &w, 0.0, out);
                    }
                    send(adj, *input, Value::Jet(dz));
                }
            }
            Op::Activate { input, f } => {
                let h = match adj_i {
                    Value::Jet(j) => j,
                    Value::Vector(_) => unreachable!(),
                };
                let pre = self.values[*input].as_jet();
                let post = self.values[i].as_jet();
                send(adj, *input, Value::Jet(activation_backward(*f, pre, &post.v, h)));
            }
            Op::Component { input, channel } => {
                let z = self.values[*input].as_jet();
                let mut dz = JetBatch::zeros_like(z.channels(), z.rows(), 1);
                let col = dz.channel_mut(*channel).expect("checked at record time");
                for (dst, a) in col.iter_mut().zip(adj_i.as_vec()) {
                    *dst = *a;
                }
                send(adj, *input, Value::Jet(dz));
            }
            Op::Add(a, b) => {
                send(adj, *a, adj_i.clone());
                send(adj, *b, adj_i);
            }
            Op::Sub(a, b) => {
                let neg = adj_i.as_vec().iter().map(|v| -v).collect();
                send(adj, *a, adj_i);
                send(adj, *b, Value::Vector(neg));
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.values[*a].as_vec(), self.values[*b].as_vec());
                let g = adj_i.as_vec();
                let da = g.iter().zip(vb).map(|(g, y)| g * y).collect();
                let db = g.iter().zip(va).map(|(g, x)| g * x).collect();
                send(adj, *a, Value::Vector(da));
                send(adj, *b, Value::Vector(db));
            }
            Op::Scale(a, c) => {
                let d = adj_i.as_vec().iter().map(|g| g * c).collect();
                send(adj, *a, Value::Vector(d));
            }
            Op::Shift(a, _) => send(adj, *a, adj_i),
            Op::Square(a) => {
                let va = self.values[*a].as_vec();
                let d = adj_i.as_vec().iter().zip(va).map(|(g, x)| 2.0 * g * x).collect();
                send(adj, *a, Value::Vector(d));
            }
            Op::Abs(a, eps) => {
                let va = self.values[*a].as_vec();
                let d = adj_i
                    .as_vec()
                    .iter()
                    .zip(va)
                    .map(|(g, &x)| g * abs_derivative(x, *eps))
                    .collect();
                send(adj, *a, Value::Vector(d));
            }
            Op::Mean(a) => {
                let n = self.values[*a].as_vec().len();
                let g = adj_i.as_vec()[0] / n as f64;
                send(adj, *a, Value::Vector(vec![g; n]));
            }
        }
        Ok(())
    }
}

#[inline]
fn abs_value(x: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        x.abs()
    } else {
        (x * x + eps * eps).sqrt() - eps
    }
}

#[inline]
fn abs_derivative(x: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        if x >= 0.0 {
            1.0
        } else {
            -1.0
        }
    } else {
        x / (x * x + eps * eps).sqrt()
    }
}

fn eval(params: &ParameterSet, values: &[Value], op: &Op) -> Result<Value> {
    let vec1 = |f: &dyn Fn(f64) -> f64, a: usize| -> Value {
        Value::Vector(values[a].as_vec().iter().map(|&x| f(x)).collect())
    };
    let vec2 = |f: &dyn Fn(f64, f64) -> f64, a: usize, b: usize| -> Value {
        let (va, vb) = (values[a].as_vec(), values[b].as_vec());
        Value::Vector(va.iter().zip(vb).map(|(&x, &y)| f(x, y)).collect())
    };
    Ok(match op {
        Op::Input { x, t, channels } => {
            let n = x.len();
            let mut jet = JetBatch::zeros_like(*channels, n, 2);
            for i in 0..n {
                jet.v[[i, 0]] = x[i];
                jet.v[[i, 1]] = t[i];
            }
            if let Some(dx) = jet.dx.as_mut() {
                dx.column_mut(0).fill(1.0);
            }
            if let Some(dt) = jet.dt.as_mut() {
                dt.column_mut(1).fill(1.0);
            }
            Value::Jet(jet)
        }
        Op::Affine {
            input,
            layer,
            bias_sign,
        } => {
            let z = values[*input].as_jet();
            let w = params.weight(*layer)?;
            let b = params.bias(*layer)?;
            Value::Jet(affine_forward(z, w, b, *bias_sign))
        }
        Op::Activate { input, f } => Value::Jet(activation_forward(*f, values[*input].as_jet())),
        Op::Component { input, channel } => {
            let z = values[*input].as_jet();
            let c = z.channel(*channel).expect("checked at record time");
            Value::Vector(c.column(0).to_vec())
        }
        Op::Param { layer, kind } => {
            let b = params.block(*layer, *kind)?;
            Value::Vector(params.slice(&b).to_vec())
        }
        Op::Constant(c) => Value::Vector(c.clone()),
        Op::Add(a, b) => vec2(&|x, y| x + y, *a, *b),
        Op::Sub(a, b) => vec2(&|x, y| x - y, *a, *b),
        Op::Mul(a, b) => vec2(&|x, y| x * y, *a, *b),
        Op::Scale(a, c) => vec1(&|x| c * x, *a),
        Op::Shift(a, c) => vec1(&|x| x + c, *a),
        Op::Square(a) => vec1(&|x| x * x, *a),
        Op::Abs(a, eps) => vec1(&|x| abs_value(x, *eps), *a),
        Op::Mean(a) => {
            let v = values[*a].as_vec();
            let mut s = 0.0;
            for x in v {
                s += x;
            }
            Value::Vector(vec![s / v.len() as f64])
        }
    })
}

/// `Z Wᵀ + sign·b` on every channel; the bias only enters the value channel.
pub(crate) fn affine_forward(
    z: &JetBatch,
    w: ArrayView2<'_, f64>,
    b: &[f64],
    bias_sign: f64,
) -> JetBatch {
    let other = |c: &Option<Array2<f64>>| c.as_ref().map(|zc| affine_rows(zc.view(), w, None));
    JetBatch {
        v: affine_rows(z.v.view(), w, Some((b, bias_sign))),
        dx: other(&z.dx),
        dt: other(&z.dt),
        dxx: other(&z.dxx),
    }
}

fn activation_forward(f: Activation, a: &JetBatch) -> JetBatch {
    let mut h = JetBatch::zeros_like(a.channels(), a.rows(), a.cols());
    let av = a.v.as_slice().expect("standard layout");
    let ax = a.dx.as_ref().map(|m| m.as_slice().expect("standard layout"));
    let at = a.dt.as_ref().map(|m| m.as_slice().expect("standard layout"));
    let axx = a.dxx.as_ref().map(|m| m.as_slice().expect("standard layout"));
    let JetBatch { v, dx, dt, dxx } = &mut h;
    let hv = v.as_slice_mut().expect("standard layout");
    let mut hx = dx.as_mut().map(|m| m.as_slice_mut().expect("standard layout"));
    let mut ht = dt.as_mut().map(|m| m.as_slice_mut().expect("standard layout"));
    let mut hxx = dxx.as_mut().map(|m| m.as_slice_mut().expect("standard layout"));
    for k in 0..av.len() {
        let [y, d1, d2, _] = f.derivatives(av[k]);
        hv[k] = y;
        if let (Some(hx), Some(ax)) = (hx.as_deref_mut(), ax) {
            hx[k] = d1 * ax[k];
        }
        if let (Some(ht), Some(at)) = (ht.as_deref_mut(), at) {
            ht[k] = d1 * at[k];
        }
        if let (Some(hxx), Some(axx), Some(ax)) = (hxx.as_deref_mut(), axx, ax) {
            hxx[k] = d2 * ax[k] * ax[k] + d1 * axx[k];
        }
    }
    h
}

/// Adjoint of the jet activation given the output adjoint `h`.
/// `post` holds the forward outputs `f(a.v)`.
fn activation_backward(f: Activation, a: &JetBatch, post: &Array2<f64>, h: JetBatch) -> JetBatch {
    let mut g = JetBatch::zeros_like(a.channels(), a.rows(), a.cols());
    let av = a.v.as_slice().expect("standard layout");
    let ax = a.dx.as_ref().map(|m| m.as_slice().expect("standard layout"));
    let at = a.dt.as_ref().map(|m| m.as_slice().expect("standard layout"));
    let axx = a.dxx.as_ref().map(|m| m.as_slice().expect("standard layout"));
    let yv = post.as_slice().expect("standard layout");
    let hv = h.v.as_slice().expect("standard layout");
    let hx = h.dx.as_ref().map(|m| m.as_slice().expect("standard layout"));
    let ht = h.dt.as_ref().map(|m| m.as_slice().expect("standard layout"));
    let hxx = h.dxx.as_ref().map(|m| m.as_slice().expect("standard layout"));
    let JetBatch { v, dx, dt, dxx } = &mut g;
    let gv = v.as_slice_mut().expect("standard layout");
    let mut gx = dx.as_mut().map(|m| m.as_slice_mut().expect("standard layout"));
    let mut gt = dt.as_mut().map(|m| m.as_slice_mut().expect("standard layout"));
    let mut gxx = dxx.as_mut().map(|m| m.as_slice_mut().expect("standard layout"));
    for k in 0..av.len() {
        let [_, d1, d2, d3] = f.derivatives_with_output(av[k], yv[k]);
        let mut sv = hv[k] * d1;
        if let (Some(hx), Some(ax), Some(gx)) = (hx, ax, gx.as_deref_mut()) {
            sv += hx[k] * d2 * ax[k];
            gx[k] = hx[k] * d1;
        }
        if let (Some(ht), Some(at), Some(gt)) = (ht, at, gt.as_deref_mut()) {
            sv += ht[k] * d2 * at[k];
            gt[k] = ht[k] * d1;
        }
        if let (Some(hxx), Some(axx), Some(ax), Some(gxx)) = (hxx, axx, ax, gxx.as_deref_mut()) {
            sv += hxx[k] * (d3 * ax[k] * ax[k] + d2 * axx[k]);
            gxx[k] = hxx[k] * d1;
            if let Some(gx) = gx.as_deref_mut() {
                gx[k] += 2.0 * hxx[k] * d2 * ax[k];
            }
        }
        gv[k] = sv;
    }
    g
}

/// Free-function form of [`Tape::backprop_params`].
pub fn backprop_params(tape: &Tape, seed: f64) -> Result<Vec<f64>> {
    tape.backprop_params(seed)
}
