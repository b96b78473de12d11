//! Operation tape for reverse-mode differentiation.
//!
//! Every operation appends a node holding its output value and the indices
//! of its inputs. [`Tape::backward`] walks the nodes in reverse recording
//! order, so gradient accumulation order is fixed and results are
//! bit-reproducible.

use super::tensor::{matmul_at_into, matmul_bt_into};
use super::{NumError, Tensor};

/// Lower and upper clip applied to probabilities before taking logs.
pub const PROB_CLIP: f64 = 1e-12;

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Activation selector for [`Tape::activation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    /// Leaky slope taken from a trainable 1×1 tensor.
    Prelu(Var),
    SoftmaxRows,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Prelu(Var, Var),
    SoftmaxRows(Var),
    ConcatCols(Var, Var),
    SliceCols(Var, usize),
    Transpose(Var),
    Sum(Var),
    Bce(Var, Vec<f64>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records an input. Its `requires_grad` flag decides whether it
    /// receives a gradient.
    pub fn leaf(&mut self, mut value: Tensor) -> Var {
        value.take_grad();
        self.push(value, Op::Leaf)
    }

    /// Records an input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value.with_requires_grad(false), Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of the last [`backward`](Self::backward) target with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].value.grad()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.cols() != tb.rows() {
            return Err(NumError::Shape {
                op: "matmul",
                left: ta.shape(),
                right: tb.shape(),
            });
        }
        let out = ta.matmul(tb)?;
        Ok(self.push_derived(out, Op::MatMul(a, b), &[a, b]))
    }

    /// `x + 𝟙·b` where `b` is a single row broadcast over the rows of `x`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var, NumError> {
        let (tx, tb) = (self.value(x), self.value(bias));
        if tb.rows() != 1 || tb.cols() != tx.cols() {
            return Err(NumError::Shape {
                op: "add_bias",
                left: tx.shape(),
                right: tb.shape(),
            });
        }
        let mut out = tx.clone();
        let cols = tx.cols();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v += tb.data()[i % cols];
        }
        Ok(self.push_derived(out, Op::AddBias(x, bias), &[x, bias]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let out = self.zip_same_shape("add", a, b, |x, y| x + y)?;
        Ok(self.push_derived(out, Op::Add(a, b), &[a, b]))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let out = self.zip_same_shape("mul", a, b, |x, y| x * y)?;
        Ok(self.push_derived(out, Op::Mul(a, b), &[a, b]))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = self.map(x, sigmoid);
        self.push_derived(out, Op::Sigmoid(x), &[x])
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.map(x, f64::tanh);
        self.push_derived(out, Op::Tanh(x), &[x])
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.map(x, |v| if v > 0.0 { v } else { 0.0 });
        self.push_derived(out, Op::Relu(x), &[x])
    }

    pub fn prelu(&mut self, x: Var, alpha: Var) -> Result<Var, NumError> {
        let ta = self.value(alpha);
        if ta.shape() != (1, 1) {
            return Err(NumError::Shape {
                op: "prelu",
                left: self.value(x).shape(),
                right: ta.shape(),
            });
        }
        let a = ta.data()[0];
        let out = self.map(x, |v| if v > 0.0 { v } else { a * v });
        Ok(self.push_derived(out, Op::Prelu(x, alpha), &[x, alpha]))
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let mut out = tx.clone();
        let cols = tx.cols();
        if cols > 0 {
            for row in out.data_mut().chunks_mut(cols) {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    total += *v;
                }
                for v in row.iter_mut() {
                    *v /= total;
                }
            }
        }
        self.push_derived(out, Op::SoftmaxRows(x), &[x])
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Result<Var, NumError> {
        Ok(match kind {
            Activation::Sigmoid => self.sigmoid(x),
            Activation::Tanh => self.tanh(x),
            Activation::Relu => self.relu(x),
            Activation::Prelu(alpha) => self.prelu(x, alpha)?,
            Activation::SoftmaxRows => self.softmax_rows(x),
        })
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rows() != tb.rows() {
            return Err(NumError::Shape {
                op: "concat_cols",
                left: ta.shape(),
                right: tb.shape(),
            });
        }
        let mut data = Vec::with_capacity(ta.len() + tb.len());
        for r in 0..ta.rows() {
            data.extend_from_slice(ta.row(r));
            data.extend_from_slice(tb.row(r));
        }
        let out = Tensor::from_vec(ta.rows(), ta.cols() + tb.cols(), data)?;
        Ok(self.push_derived(out, Op::ConcatCols(a, b), &[a, b]))
    }

    /// Columns `start..end` of `x`.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var, NumError> {
        let tx = self.value(x);
        if start > end || end > tx.cols() {
            return Err(NumError::Contract(format!(
                "slice_cols: range {start}..{end} outside {} columns",
                tx.cols()
            )));
        }
        let mut data = Vec::with_capacity(tx.rows() * (end - start));
        for r in 0..tx.rows() {
            data.extend_from_slice(&tx.row(r)[start..end]);
        }
        let out = Tensor::from_vec(tx.rows(), end - start, data)?;
        Ok(self.push_derived(out, Op::SliceCols(x, start), &[x]))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let out = self.value(x).transpose();
        self.push_derived(out, Op::Transpose(x), &[x])
    }

    /// Sum of all entries as a 1×1 tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let total = self.value(x).data().iter().sum();
        self.push_derived(Tensor::scalar(total), Op::Sum(x), &[x])
    }

    /// Mean binary cross-entropy between probabilities `pred` and 0/1 `targets`.
    ///
    /// Probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]`; the clip
    /// has zero derivative outside that band.
    pub fn bce_loss(&mut self, pred: Var, targets: &[f64]) -> Result<Var, NumError> {
        let tp = self.value(pred);
        if tp.len() != targets.len() || targets.is_empty() {
            return Err(NumError::Contract(format!(
                "bce_loss: {} predictions vs {} targets",
                tp.len(),
                targets.len()
            )));
        }
        let total: f64 = tp
            .data()
            .iter()
            .zip(targets)
            .map(|(&p, &y)| bce_term(p, y))
            .sum();
        let loss = Tensor::scalar(total / targets.len() as f64);
        Ok(self.push_derived(loss, Op::Bce(pred, targets.to_vec()), &[pred]))
    }

    /// Propagates d`loss`/d· to every trainable node.
    ///
    /// Gradients from a previous call are replaced, not accumulated.
    /// Trainable nodes that `loss` does not depend on end up with zeros.
    pub fn backward(&mut self, loss: Var) -> Result<(), NumError> {
        if loss.0 >= self.nodes.len() {
            return Err(NumError::Contract("backward: loss is not on this tape".into()));
        }
        let shape = self.nodes[loss.0].value.shape();
        if shape != (1, 1) {
            return Err(NumError::Contract(format!(
                "backward: loss must be 1x1, got {}x{}",
                shape.0, shape.1
            )));
        }

        for node in &mut self.nodes {
            node.value.take_grad();
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        if self.nodes[loss.0].value.requires_grad() {
            grads[loss.0] = Some(vec![1.0]);
        }
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            self.nodes[i].value.set_grad(g);
        }
        for node in &mut self.nodes {
            if node.value.requires_grad() && node.value.grad().is_none() {
                let n = node.value.len();
                node.value.set_grad(vec![0.0; n]);
            }
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                self.accumulate(grads, *a, |da| matmul_bt_into(g, tb.data(), da, m, n, k));
                self.accumulate(grads, *b, |db| matmul_at_into(ta.data(), g, db, m, k, n));
            }
            Op::AddBias(x, b) => {
                self.accumulate(grads, *x, |dx| add_assign(dx, g));
                let cols = out.cols();
                self.accumulate(grads, *b, |db| {
                    for (j, gv) in g.iter().enumerate() {
                        db[j % cols] += gv;
                    }
                });
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, |da| add_assign(da, g));
                self.accumulate(grads, *b, |db| add_assign(db, g));
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                self.accumulate(grads, *a, |da| {
                    for ((d, gv), bv) in da.iter_mut().zip(g).zip(tb.data()) {
                        *d += gv * bv;
                    }
                });
                self.accumulate(grads, *b, |db| {
                    for ((d, gv), av) in db.iter_mut().zip(g).zip(ta.data()) {
                        *d += gv * av;
                    }
                });
            }
            Op::Sigmoid(x) => self.accumulate(grads, *x, |dx| {
                for ((d, gv), y) in dx.iter_mut().zip(g).zip(out.data()) {
                    *d += gv * y * (1.0 - y);
                }
            }),
            Op::Tanh(x) => self.accumulate(grads, *x, |dx| {
                for ((d, gv), y) in dx.iter_mut().zip(g).zip(out.data()) {
                    *d += gv * (1.0 - y * y);
                }
            }),
            Op::Relu(x) => {
                let tx = self.value(*x);
                self.accumulate(grads, *x, |dx| {
                    for ((d, gv), xv) in dx.iter_mut().zip(g).zip(tx.data()) {
                        if *xv > 0.0 {
                            *d += gv;
                        }
                    }
                });
            }
            Op::Prelu(x, alpha) => {
                let tx = self.value(*x);
                let a = self.value(*alpha).data()[0];
                self.accumulate(grads, *x, |dx| {
                    for ((d, gv), xv) in dx.iter_mut().zip(g).zip(tx.data()) {
                        *d += if *xv > 0.0 { *gv } else { a * gv };
                    }
                });
                self.accumulate(grads, *alpha, |da| {
                    da[0] += g
                        .iter()
                        .zip(tx.data())
                        .filter(|(_, xv)| **xv <= 0.0)
                        .map(|(gv, xv)| gv * xv)
                        .sum::<f64>();
                });
            }
            Op::SoftmaxRows(x) => {
                let cols = out.cols();
                self.accumulate(grads, *x, |dx| {
                    for ((drow, grow), yrow) in dx
                        .chunks_mut(cols)
                        .zip(g.chunks(cols))
                        .zip(out.data().chunks(cols))
                    {
                        let dot: f64 = grow.iter().zip(yrow).map(|(a, b)| a * b).sum();
                        for ((d, gv), y) in drow.iter_mut().zip(grow).zip(yrow) {
                            *d += y * (gv - dot);
                        }
                    }
                });
            }
            Op::ConcatCols(a, b) => {
                let (ca, cb) = (self.value(*a).cols(), self.value(*b).cols());
                let width = ca + cb;
                self.accumulate(grads, *a, |da| {
                    for (drow, grow) in da.chunks_mut(ca.max(1)).zip(g.chunks(width)) {
                        add_assign(drow, &grow[..ca]);
                    }
                });
                self.accumulate(grads, *b, |db| {
                    for (drow, grow) in db.chunks_mut(cb.max(1)).zip(g.chunks(width)) {
                        add_assign(drow, &grow[ca..]);
                    }
                });
            }
            Op::SliceCols(x, start) => {
                let in_cols = self.value(*x).cols();
                let w = out.cols();
                self.accumulate(grads, *x, |dx| {
                    for (r, grow) in g.chunks(w.max(1)).enumerate().take(out.rows()) {
                        let base = r * in_cols + start;
                        add_assign(&mut dx[base..base + w], grow);
                    }
                });
            }
            Op::Transpose(x) => {
                let (rows, cols) = (out.rows(), out.cols());
                self.accumulate(grads, *x, |dx| {
                    for r in 0..rows {
                        for c in 0..cols {
                            dx[c * rows + r] += g[r * cols + c];
                        }
                    }
                });
            }
            Op::Sum(x) => self.accumulate(grads, *x, |dx| dx.iter_mut().for_each(|d| *d += g[0])),
            Op::Bce(pred, targets) => {
                let tp = self.value(*pred);
                let scale = g[0] / targets.len() as f64;
                self.accumulate(grads, *pred, |dp| {
                    for ((d, &p), &y) in dp.iter_mut().zip(tp.data()).zip(targets) {
                        if p > PROB_CLIP && p < 1.0 - PROB_CLIP {
                            *d += scale * ((1.0 - y) / (1.0 - p) - y / p);
                        }
                    }
                });
            }
        }
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl FnOnce(&mut [f64])) {
        let value = &self.nodes[v.0].value;
        if !value.requires_grad() {
            return;
        }
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; value.len()]);
        f(slot);
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn push_derived(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires = inputs.iter().any(|v| self.value(*v).requires_grad());
        self.push(value.with_requires_grad(requires), op)
    }

    fn map(&self, x: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let mut out = self.value(x).clone().with_requires_grad(false);
        out.data_mut().iter_mut().for_each(|v| *v = f(*v));
        out
    }

    fn zip_same_shape(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, NumError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(NumError::Shape {
                op,
                left: ta.shape(),
                right: tb.shape(),
            });
        }
        let mut out = ta.clone().with_requires_grad(false);
        for (o, bv) in out.data_mut().iter_mut().zip(tb.data()) {
            *o = f(*o, *bv);
        }
        Ok(out)
    }
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Clipped per-example binary cross-entropy.
pub fn bce_term(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

fn add_assign(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
