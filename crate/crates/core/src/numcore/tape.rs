//! Reverse-mode differentiation over a linear record of primitive calls.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use super::backend::Backend;
use super::{kernels, ops, Param, ParamId, Tensor};
use crate::{Error, Result};

static NEXT_TAPE: AtomicU64 = AtomicU64::new(1);

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    tape: u64,
    index: usize,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    MatMul(usize, usize),
    Bmm { a: usize, b: usize, trans_b: bool },
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddBias(usize, usize),
    Scale(usize, f64),
    Tanh(usize),
    Relu(usize),
    Exp(usize),
    Softmax { x: usize, outer: usize, len: usize, inner: usize },
    LayerNorm { x: usize, gain: usize, bias: usize, xhat: Vec<f64>, inv_std: Vec<f64> },
    Reshape(usize),
    Transpose01(usize),
    ConcatCols(Vec<usize>),
    SliceCols { x: usize, start: usize },
    ConcatRows(Vec<usize>),
    SliceRows { x: usize, start: usize },
    SelectRows { x: usize, idx: Vec<usize> },
    SumAll(usize),
    MeanAll(usize),
}

impl Op {
    fn inputs(&self) -> Vec<usize> {
        use Op::*;
        match self {
            Leaf | Constant => vec![],
            MatMul(a, b) | Add(a, b) | Sub(a, b) | Mul(a, b) | AddBias(a, b) => vec![*a, *b],
            Bmm { a, b, .. } => vec![*a, *b],
            Scale(x, _) | Tanh(x) | Relu(x) | Exp(x) | Reshape(x) | Transpose01(x) | SumAll(x)
            | MeanAll(x) => vec![*x],
            Softmax { x, .. } | SliceCols { x, .. } | SliceRows { x, .. } | SelectRows { x, .. } => {
                vec![*x]
            }
            LayerNorm { x, gain, bias, .. } => vec![*x, *gain, *bias],
            ConcatCols(v) | ConcatRows(v) => v.clone(),
        }
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    tracked: bool,
}

/// Records primitive operations for one backward pass.
///
/// Nodes are appended in evaluation order, so inputs always precede their
/// consumers. [`Tape::backward`] consumes the record; a second call fails.
#[derive(Debug)]
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
    params: HashMap<ParamId, usize>,
    frozen: bool,
    consumed: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients of a scalar loss with respect to every reachable leaf.
#[derive(Debug)]
pub struct Gradients {
    tape: u64,
    by_leaf: HashMap<usize, Tensor>,
    params: HashMap<ParamId, usize>,
}

impl Gradients {
    pub fn wrt(&self, v: &Var) -> Option<&Tensor> {
        if v.tape != self.tape {
            return None;
        }
        self.by_leaf.get(&v.index)
    }

    pub fn param(&self, p: &Param) -> Option<&Tensor> {
        self.params.get(&p.id()).and_then(|i| self.by_leaf.get(i))
    }

    /// Gradient for `p`, or zeros if the loss does not depend on it.
    pub fn param_or_zeros(&self, p: &Param) -> Tensor {
        self.param(p).cloned().unwrap_or_else(|| Tensor::zeros(p.shape()))
    }

    pub fn len(&self) -> usize {
        self.by_leaf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_leaf.is_empty()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            params: HashMap::new(),
            frozen: false,
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a tracked input that is not a network parameter.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Runs `f` with parameter binding disabled: any [`Backend::param`] call
    /// inside yields a constant, so those parameters receive no gradient.
    pub fn with_frozen_params<R>(&mut self, f: impl FnOnce(&mut Self) -> R) -> R {
        let prev = std::mem::replace(&mut self.frozen, true);
        let out = f(self);
        self.frozen = prev;
        out
    }

    pub fn is_tracked(&self, v: &Var) -> bool {
        self.nodes.get(v.index).is_some_and(|n| n.tracked)
    }

    fn push(&mut self, value: Tensor, op: Op, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var { tape: self.id, index: self.nodes.len() - 1 }
    }

    fn check(&self, v: &Var) -> usize {
        assert_eq!(v.tape, self.id, "variable belongs to a different tape");
        assert!(!self.consumed, "tape already consumed by backward");
        v.index
    }

    fn record(&mut self, value: Tensor, op: Op) -> Var {
        let tracked = op.inputs().iter().any(|&i| self.nodes[i].tracked);
        if tracked {
            self.push(value, op, true)
        } else {
            self.push(value, Op::Constant, false)
        }
    }

    fn val(&self, v: &Var) -> &Tensor {
        &self.nodes[self.check(v)].value
    }

    /// Reverse sweep from a scalar loss. Clears the tape.
    pub fn backward(&mut self, loss: &Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::Tape("backward called twice on the same tape".into()));
        }
        if loss.tape != self.id {
            return Err(Error::Tape("loss belongs to a different tape".into()));
        }
        let root = &self.nodes[loss.index];
        if root.value.len() != 1 {
            return Err(Error::Tape(format!("loss must be scalar, shape {:?}", root.value.shape())));
        }
        if !root.tracked {
            return Err(Error::Tape("loss does not depend on any tracked value".into()));
        }
        self.consumed = true;
        let nodes = std::mem::take(&mut self.nodes);
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.index] = Some(Tensor::full(nodes[loss.index].value.shape(), 1.0));

        let mut by_leaf = HashMap::new();
        for i in (0..=loss.index).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &nodes[i];
            if !node.tracked {
                continue;
            }
            if let Op::Leaf = node.op {
                by_leaf.insert(i, g);
                continue;
            }
            for (input, contribution) in local_grads(&nodes, node, &g) {
                if !nodes[input].tracked {
                    continue;
                }
                match &mut grads[input] {
                    Some(acc) => acc.add_assign(&contribution),
                    slot @ None => *slot = Some(contribution),
                }
            }
        }
        let params = std::mem::take(&mut self.params);
        Ok(Gradients { tape: self.id, by_leaf, params })
    }
}

/// Contributions of `g = ∂loss/∂node` to each input of `node`.
fn local_grads(nodes: &[Node], node: &Node, g: &Tensor) -> Vec<(usize, Tensor)> {
    let v = |i: usize| &nodes[i].value;
    let tracked = |i: usize| nodes[i].tracked;
    let out = &node.value;
    match &node.op {
        Op::Leaf | Op::Constant => vec![],
        Op::MatMul(a, b) => {
            let (m, k) = (v(*a).shape()[0], v(*a).shape()[1]);
            let n = v(*b).shape()[1];
            let mut res = Vec::new();
            if tracked(*a) {
                let bt = kernels::transpose(v(*b).data(), k, n);
                let da = kernels::matmul(g.data(), &bt, m, n, k);
                res.push((*a, Tensor::new(&[m, k], da).unwrap()));
            }
            if tracked(*b) {
                let at = kernels::transpose(v(*a).data(), m, k);
                let db = kernels::matmul(&at, g.data(), k, m, n);
                res.push((*b, Tensor::new(&[k, n], db).unwrap()));
            }
            res
        }
        Op::Bmm { a, b, trans_b } => {
            let (batch, m, k) = (v(*a).shape()[0], v(*a).shape()[1], v(*a).shape()[2]);
            let n = out.shape()[2];
            let mut res = Vec::new();
            if tracked(*a) {
                // dA = G · Bᵀ (or G · B when b is stored transposed)
                let da = if *trans_b {
                    kernels::bmm(g.data(), v(*b).data(), batch, m, n, k)
                } else {
                    let bt = kernels::batch_transpose(v(*b).data(), batch, k, n);
                    kernels::bmm(g.data(), &bt, batch, m, n, k)
                };
                res.push((*a, Tensor::new(&[batch, m, k], da).unwrap()));
            }
            if tracked(*b) {
                let db = if *trans_b {
                    // b is [B,n,k]: dB = Gᵀ · A
                    let gt = kernels::batch_transpose(g.data(), batch, m, n);
                    Tensor::new(&[batch, n, k], kernels::bmm(&gt, v(*a).data(), batch, n, m, k))
                } else {
                    let at = kernels::batch_transpose(v(*a).data(), batch, m, k);
                    Tensor::new(&[batch, k, n], kernels::bmm(&at, g.data(), batch, k, m, n))
                };
                res.push((*b, db.unwrap()));
            }
            res
        }
        Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
        Op::Sub(a, b) => vec![(*a, g.clone()), (*b, g.map(|x| -x))],
        Op::Mul(a, b) => vec![
            (*a, g.zip_map(v(*b), "mul", |x, y| x * y).unwrap()),
            (*b, g.zip_map(v(*a), "mul", |x, y| x * y).unwrap()),
        ],
        Op::AddBias(x, bias) => {
            let c = g.cols();
            let mut db = vec![0.0; c];
            for row in g.data().chunks(c) {
                for (d, r) in db.iter_mut().zip(row) {
                    *d += r;
                }
            }
            vec![(*x, g.clone()), (*bias, Tensor::vector(db))]
        }
        Op::Scale(x, c) => vec![(*x, g.map(|d| d * c))],
        Op::Tanh(x) => vec![(*x, g.zip_map(out, "tanh", |d, y| d * (1.0 - y * y)).unwrap())],
        Op::Relu(x) => {
            vec![(*x, g.zip_map(v(*x), "relu", |d, xv| if xv > 0.0 { d } else { 0.0 }).unwrap())]
        }
        Op::Exp(x) => vec![(*x, g.zip_map(out, "exp", |d, y| d * y).unwrap())],
        Op::Softmax { x, outer, len, inner } => {
            let dx = kernels::softmax_backward(out.data(), g.data(), *outer, *len, *inner);
            vec![(*x, Tensor::new(out.shape(), dx).unwrap())]
        }
        Op::LayerNorm { x, gain, bias, xhat, inv_std } => {
            let cols = out.cols();
            let rows = out.rows();
            let gv = v(*gain).data();
            let mut dgain = vec![0.0; cols];
            let mut dbias = vec![0.0; cols];
            let mut dx = vec![0.0; out.len()];
            let nf = cols as f64;
            for r in 0..rows {
                let gr = &g.data()[r * cols..(r + 1) * cols];
                let xr = &xhat[r * cols..(r + 1) * cols];
                let mut sum_d = 0.0;
                let mut sum_dx = 0.0;
                for j in 0..cols {
                    dgain[j] += gr[j] * xr[j];
                    dbias[j] += gr[j];
                    let dxh = gr[j] * gv[j];
                    sum_d += dxh;
                    sum_dx += dxh * xr[j];
                }
                for j in 0..cols {
                    let dxh = gr[j] * gv[j];
                    dx[r * cols + j] = inv_std[r] / nf * (nf * dxh - sum_d - xr[j] * sum_dx);
                }
            }
            vec![
                (*x, Tensor::new(out.shape(), dx).unwrap()),
                (*gain, Tensor::vector(dgain)),
                (*bias, Tensor::vector(dbias)),
            ]
        }
        Op::Reshape(x) => vec![(*x, g.clone().reshape(v(*x).shape()).unwrap())],
        Op::Transpose01(x) => vec![(*x, ops::transpose01(g).unwrap())],
        Op::ConcatCols(parts) => {
            let mut start = 0;
            let mut res = Vec::with_capacity(parts.len());
            for &p in parts {
                let w = v(p).cols();
                if tracked(p) {
                    res.push((p, ops::slice_cols(g, start, w).unwrap()));
                }
                start += w;
            }
            res
        }
        Op::SliceCols { x, start } => {
            let (rows, cols) = (v(*x).shape()[0], v(*x).shape()[1]);
            let w = g.cols();
            let mut dx = vec![0.0; rows * cols];
            for r in 0..rows {
                dx[r * cols + start..r * cols + start + w].copy_from_slice(g.row(r));
            }
            vec![(*x, Tensor::new(&[rows, cols], dx).unwrap())]
        }
        Op::ConcatRows(parts) => {
            let mut start = 0;
            let mut res = Vec::with_capacity(parts.len());
            for &p in parts {
                let r = v(p).shape()[0];
                if tracked(p) {
                    res.push((p, ops::slice_rows(g, start, r).unwrap()));
                }
                start += r;
            }
            res
        }
        Op::SliceRows { x, start } => {
            let cols = g.cols();
            let mut dx = Tensor::zeros(v(*x).shape());
            dx.data_mut()[start * cols..start * cols + g.len()].copy_from_slice(g.data());
            vec![(*x, dx)]
        }
        Op::SelectRows { x, idx } => {
            let cols = g.cols();
            let mut dx = Tensor::zeros(v(*x).shape());
            for (k, &i) in idx.iter().enumerate() {
                for (d, s) in dx.data_mut()[i * cols..(i + 1) * cols].iter_mut().zip(g.row(k)) {
                    *d += s;
                }
            }
            vec![(*x, dx)]
        }
        Op::SumAll(x) => vec![(*x, Tensor::full(v(*x).shape(), g.data()[0]))],
        Op::MeanAll(x) => {
            let n = v(*x).len() as f64;
            vec![(*x, Tensor::full(v(*x).shape(), g.data()[0] / n))]
        }
    }
}

impl Backend for Tape {
    type T = Var;

    fn param(&mut self, p: &Param) -> Var {
        if self.frozen {
            return self.push(p.value.clone(), Op::Constant, false);
        }
        if let Some(&i) = self.params.get(&p.id()) {
            return Var { tape: self.id, index: i };
        }
        let v = self.push(p.value.clone(), Op::Leaf, true);
        self.params.insert(p.id(), v.index);
        v
    }

    fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Constant, false)
    }

    fn value<'a>(&'a self, x: &'a Var) -> &'a Tensor {
        self.val(x)
    }

    fn matmul(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let out = ops::matmul(self.val(a), self.val(b))?;
        Ok(self.record(out, Op::MatMul(a.index, b.index)))
    }

    fn bmm(&mut self, a: &Var, b: &Var, trans_b: bool) -> Result<Var> {
        let out = ops::bmm(self.val(a), self.val(b), trans_b)?;
        Ok(self.record(out, Op::Bmm { a: a.index, b: b.index, trans_b }))
    }

    fn add(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let out = ops::add(self.val(a), self.val(b))?;
        Ok(self.record(out, Op::Add(a.index, b.index)))
    }

    fn sub(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let out = ops::sub(self.val(a), self.val(b))?;
        Ok(self.record(out, Op::Sub(a.index, b.index)))
    }

    fn mul(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let out = ops::mul(self.val(a), self.val(b))?;
        Ok(self.record(out, Op::Mul(a.index, b.index)))
    }

    fn add_bias(&mut self, x: &Var, bias: &Var) -> Result<Var> {
        let out = ops::add_bias(self.val(x), self.val(bias))?;
        Ok(self.record(out, Op::AddBias(x.index, bias.index)))
    }

    fn scale(&mut self, x: &Var, c: f64) -> Var {
        let out = ops::scale(self.val(x), c);
        self.record(out, Op::Scale(x.index, c))
    }

    fn tanh(&mut self, x: &Var) -> Var {
        let out = ops::tanh(self.val(x));
        self.record(out, Op::Tanh(x.index))
    }

    fn relu(&mut self, x: &Var) -> Var {
        let out = ops::relu(self.val(x));
        self.record(out, Op::Relu(x.index))
    }

    fn exp(&mut self, x: &Var) -> Var {
        let out = ops::exp(self.val(x));
        self.record(out, Op::Exp(x.index))
    }

    fn softmax(&mut self, x: &Var, axis: usize) -> Result<Var> {
        let xv = self.val(x);
        let out = ops::softmax(xv, axis)?;
        let (outer, len, inner) = kernels::axis_split(xv.shape(), axis);
        Ok(self.record(out, Op::Softmax { x: x.index, outer, len, inner }))
    }

    fn layer_norm(&mut self, x: &Var, gain: &Var, bias: &Var, eps: f64) -> Result<Var> {
        let (out, xhat, inv_std) = ops::layer_norm(self.val(x), self.val(gain), self.val(bias), eps)?;
        let op = Op::LayerNorm { x: x.index, gain: gain.index, bias: bias.index, xhat, inv_std };
        Ok(self.record(out, op))
    }

    fn reshape(&mut self, x: &Var, shape: &[usize]) -> Result<Var> {
        let out = ops::reshape(self.val(x), shape)?;
        Ok(self.record(out, Op::Reshape(x.index)))
    }

    fn transpose01(&mut self, x: &Var) -> Result<Var> {
        let out = ops::transpose01(self.val(x))?;
        Ok(self.record(out, Op::Transpose01(x.index)))
    }

    fn concat_cols(&mut self, parts: &[&Var]) -> Result<Var> {
        let values: Vec<&Tensor> = parts.iter().map(|p| self.val(p)).collect();
        let out = ops::concat_cols(&values)?;
        Ok(self.record(out, Op::ConcatCols(parts.iter().map(|p| p.index).collect())))
    }

    fn slice_cols(&mut self, x: &Var, start: usize, width: usize) -> Result<Var> {
        let out = ops::slice_cols(self.val(x), start, width)?;
        Ok(self.record(out, Op::SliceCols { x: x.index, start }))
    }

    fn concat_rows(&mut self, parts: &[&Var]) -> Result<Var> {
        let values: Vec<&Tensor> = parts.iter().map(|p| self.val(p)).collect();
        let out = ops::concat_rows(&values)?;
        Ok(self.record(out, Op::ConcatRows(parts.iter().map(|p| p.index).collect())))
    }

    fn slice_rows(&mut self, x: &Var, start: usize, len: usize) -> Result<Var> {
        let out = ops::slice_rows(self.val(x), start, len)?;
        Ok(self.record(out, Op::SliceRows { x: x.index, start }))
    }

    fn select_rows(&mut self, x: &Var, idx: &[usize]) -> Result<Var> {
        let out = ops::select_rows(self.val(x), idx)?;
        Ok(self.record(out, Op::SelectRows { x: x.index, idx: idx.to_vec() }))
    }

    fn sum_all(&mut self, x: &Var) -> Var {
        let out = ops::sum_all(self.val(x));
        self.record(out, Op::SumAll(x.index))
    }

    fn mean_all(&mut self, x: &Var) -> Var {
        let out = ops::mean_all(self.val(x));
        self.record(out, Op::MeanAll(x.index))
    }
}
