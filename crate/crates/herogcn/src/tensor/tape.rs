//! Operation tape for reverse-mode gradient accumulation.
//!
//! Every differentiable op appends a node holding its output value and the
//! handles of its inputs. [`Tape::backward`] walks the nodes in reverse,
//! applying each op's local rule and summing contributions across fan-out.

use super::{sigmoid, Real, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op<F> {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, F),
    AddScalar(Var, F),
    Relu(Var),
    Sigmoid(Var),
    Log(Var),
    Square(Var),
    Recip(Var),
    Clamp(Var, F, F),
    RowSoftmax(Var),
    Sum(Var),
    SumAxis0(Var),
    SumAxis1(Var),
    AddRowVec(Var, Var),
    AddColVec(Var, Var),
    MulRowVec(Var, Var),
    MulColVec(Var, Var),
    ConcatCols(Vec<Var>),
}

struct Node<F> {
    value: Tensor<F>,
    grad: Option<Tensor<F>>,
    op: Op<F>,
    needs_grad: bool,
}

/// Recorded forward computation; topological order is the insertion order.
pub struct Tape<F> {
    nodes: Vec<Node<F>>,
}

impl<F: Real> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Record a trainable leaf. Its gradient is populated by `backward`.
    pub fn param(&mut self, value: Tensor<F>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Record a non-trainable leaf (inputs, targets, fixed matrices).
    pub fn constant(&mut self, value: Tensor<F>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    /// Gradient of the last `backward` call, `None` if the node was not reached.
    pub fn grad(&self, v: Var) -> Option<&Tensor<F>> {
        self.nodes[v.0].grad.as_ref()
    }

    /// Gradient as an owned tensor, zeros when the node was never reached.
    pub fn grad_or_zeros(&self, v: Var) -> Tensor<F> {
        let n = &self.nodes[v.0];
        n.grad
            .clone()
            .unwrap_or_else(|| Tensor::zeros(n.value.rows(), n.value.cols()))
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>, needs_grad: bool) -> Var {
        debug_assert!(
            value.all_finite(),
            "non-finite entries produced by {op:?}"
        );
        self.nodes.push(Node {
            value,
            grad: None,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn child(&mut self, value: Tensor<F>, op: Op<F>) -> Var {
        let needs = match &op {
            Op::Leaf => false,
            Op::MatMul(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::AddRowVec(a, b)
            | Op::AddColVec(a, b)
            | Op::MulRowVec(a, b)
            | Op::MulColVec(a, b) => self.nodes[a.0].needs_grad || self.nodes[b.0].needs_grad,
            Op::Transpose(a)
            | Op::Scale(a, _)
            | Op::AddScalar(a, _)
            | Op::Relu(a)
            | Op::Sigmoid(a)
            | Op::Log(a)
            | Op::Square(a)
            | Op::Recip(a)
            | Op::Clamp(a, _, _)
            | Op::RowSoftmax(a)
            | Op::Sum(a)
            | Op::SumAxis0(a)
            | Op::SumAxis1(a) => self.nodes[a.0].needs_grad,
            Op::ConcatCols(parts) => parts.iter().any(|p| self.nodes[p.0].needs_grad),
        };
        self.push(value, op, needs)
    }

    // ---- differentiable operations -------------------------------------

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.child(value, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        self.child(value, Op::Transpose(a))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.child(value, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).sub(self.value(b))?;
        Ok(self.child(value, Op::Sub(a, b)))
    }

    /// Entrywise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).hadamard(self.value(b))?;
        Ok(self.child(value, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, c: F) -> Var {
        let value = self.value(a).scale(c);
        self.child(value, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: F) -> Var {
        let value = self.value(a).map(|v| v + c);
        self.child(value, Op::AddScalar(a, c))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|v| v.max(F::zero()));
        self.child(value, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        self.child(value, Op::Sigmoid(a))
    }

    /// Natural log; every entry must be strictly positive.
    pub fn log(&mut self, a: Var) -> Result<Var> {
        if let Some(bad) = self.value(a).data().iter().find(|v| **v <= F::zero()) {
            return Err(Error::Domain {
                op: "log",
                detail: format!("non-positive entry {bad} (clamp before taking log)"),
            });
        }
        let value = self.value(a).map(|v| v.ln());
        Ok(self.child(value, Op::Log(a)))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|v| v * v);
        self.child(value, Op::Square(a))
    }

    /// Entrywise reciprocal; every entry must be nonzero.
    pub fn recip(&mut self, a: Var) -> Result<Var> {
        if self.value(a).data().iter().any(|v| *v == F::zero()) {
            return Err(Error::Domain {
                op: "recip",
                detail: "zero entry".to_string(),
            });
        }
        let value = self.value(a).map(|v| v.recip());
        Ok(self.child(value, Op::Recip(a)))
    }

    /// Clamp entries into `[lo, hi]`; gradient passes through inside the range.
    pub fn clamp(&mut self, a: Var, lo: F, hi: F) -> Var {
        let value = self.value(a).map(|v| v.min(hi).max(lo));
        self.child(value, Op::Clamp(a, lo, hi))
    }

    /// Softmax over each row, stabilized by per-row max subtraction.
    pub fn row_softmax(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = Tensor::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            let row = x.row(i);
            let max = row.iter().cloned().fold(F::neg_infinity(), F::max);
            let mut denom = F::zero();
            let exps: Vec<F> = row.iter().map(|&v| (v - max).exp()).collect();
            for &e in &exps {
                denom += e;
            }
            for (j, e) in exps.into_iter().enumerate() {
                out.set(i, j, e / denom);
            }
        }
        self.child(out, Op::RowSoftmax(a))
    }

    /// Sum of all entries as a 1x1 tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).sum());
        self.child(value, Op::Sum(a))
    }

    /// Column sums: `m x n -> 1 x n`.
    pub fn sum_axis0(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = Tensor::zeros(1, x.cols());
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let v = out.get(0, j) + x.get(i, j);
                out.set(0, j, v);
            }
        }
        self.child(out, Op::SumAxis0(a))
    }

    /// Row sums: `m x n -> m x 1`.
    pub fn sum_axis1(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = Tensor::zeros(x.rows(), 1);
        for i in 0..x.rows() {
            let mut acc = F::zero();
            for &v in x.row(i) {
                acc += v;
            }
            out.set(i, 0, acc);
        }
        self.child(out, Op::SumAxis1(a))
    }

    /// Add a `1 x n` row vector to every row of an `m x n` matrix.
    pub fn add_row_vec(&mut self, a: Var, v: Var) -> Result<Var> {
        let (x, r) = (self.value(a), self.value(v));
        if r.rows() != 1 || r.cols() != x.cols() {
            return Err(Error::shape("add_row_vec", x.shape(), r.shape()));
        }
        let mut out = x.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let val = out.get(i, j) + r.get(0, j);
                out.set(i, j, val);
            }
        }
        Ok(self.child(out, Op::AddRowVec(a, v)))
    }

    /// Add an `m x 1` column vector to every column of an `m x n` matrix.
    pub fn add_col_vec(&mut self, a: Var, v: Var) -> Result<Var> {
        let (x, c) = (self.value(a), self.value(v));
        if c.cols() != 1 || c.rows() != x.rows() {
            return Err(Error::shape("add_col_vec", x.shape(), c.shape()));
        }
        let mut out = x.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let val = out.get(i, j) + c.get(i, 0);
                out.set(i, j, val);
            }
        }
        Ok(self.child(out, Op::AddColVec(a, v)))
    }

    /// Multiply every row of an `m x n` matrix by a `1 x n` row vector.
    pub fn mul_row_vec(&mut self, a: Var, v: Var) -> Result<Var> {
        let (x, r) = (self.value(a), self.value(v));
        if r.rows() != 1 || r.cols() != x.cols() {
            return Err(Error::shape("mul_row_vec", x.shape(), r.shape()));
        }
        let mut out = x.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let val = out.get(i, j) * r.get(0, j);
                out.set(i, j, val);
            }
        }
        Ok(self.child(out, Op::MulRowVec(a, v)))
    }

    /// Multiply every column of an `m x n` matrix by an `m x 1` column vector.
    pub fn mul_col_vec(&mut self, a: Var, v: Var) -> Result<Var> {
        let (x, c) = (self.value(a), self.value(v));
        if c.cols() != 1 || c.rows() != x.rows() {
            return Err(Error::shape("mul_col_vec", x.shape(), c.shape()));
        }
        let mut out = x.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let val = out.get(i, j) * c.get(i, 0);
                out.set(i, j, val);
            }
        }
        Ok(self.child(out, Op::MulColVec(a, v)))
    }

    /// Concatenate matrices with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Domain {
                op: "concat_cols",
                detail: "no inputs".to_string(),
            });
        }
        let rows = self.value(parts[0]).rows();
        let mut total_cols = 0;
        for &p in parts {
            if self.value(p).rows() != rows {
                return Err(Error::shape(
                    "concat_cols",
                    self.value(parts[0]).shape(),
                    self.value(p).shape(),
                ));
            }
            total_cols += self.value(p).cols();
        }
        let mut out = Tensor::zeros(rows, total_cols);
        let mut offset = 0;
        for &p in parts {
            let x = self.value(p);
            for i in 0..rows {
                for j in 0..x.cols() {
                    out.set(i, offset + j, x.get(i, j));
                }
            }
            offset += x.cols();
        }
        let value = out;
        Ok(self.child(value, Op::ConcatCols(parts.to_vec())))
    }

    /// Column mean of an `m x n` matrix as a `1 x n` summary row.
    pub fn mean_axis0(&mut self, a: Var) -> Var {
        let n = self.value(a).rows();
        let s = self.sum_axis0(a);
        self.scale(s, F::one() / F::of(n as f64))
    }

    // ---- backward -------------------------------------------------------

    /// Reverse-topological gradient accumulation from a scalar loss.
    ///
    /// Clears previous gradients first, so it may be called repeatedly on the
    /// same tape with different roots.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Domain {
                op: "backward",
                detail: "empty tape".to_string(),
            });
        }
        let loss_shape = self.value(loss).shape();
        if loss_shape != (1, 1) {
            return Err(Error::shape("backward", loss_shape, (1, 1)));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[loss.0].grad = Some(Tensor::scalar(F::one()));

        for idx in (0..=loss.0).rev() {
            let Some(grad) = self.nodes[idx].grad.take() else {
                continue;
            };
            let op = self.nodes[idx].op.clone();
            match op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    if self.needs(a) {
                        let bt = self.nodes[b.0].value.transpose();
                        let da = grad.matmul(&bt)?;
                        self.accumulate(a, da);
                    }
                    if self.needs(b) {
                        let at = self.nodes[a.0].value.transpose();
                        let db = at.matmul(&grad)?;
                        self.accumulate(b, db);
                    }
                }
                Op::Transpose(a) => {
                    if self.needs(a) {
                        self.accumulate(a, grad.transpose());
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(a) {
                        self.accumulate(a, grad.clone());
                    }
                    if self.needs(b) {
                        self.accumulate(b, grad.clone());
                    }
                }
                Op::Sub(a, b) => {
                    if self.needs(a) {
                        self.accumulate(a, grad.clone());
                    }
                    if self.needs(b) {
                        self.accumulate(b, grad.scale(-F::one()));
                    }
                }
                Op::Mul(a, b) => {
                    if self.needs(a) {
                        let da = grad.hadamard(&self.nodes[b.0].value)?;
                        self.accumulate(a, da);
                    }
                    if self.needs(b) {
                        let db = grad.hadamard(&self.nodes[a.0].value)?;
                        self.accumulate(b, db);
                    }
                }
                Op::Scale(a, c) => {
                    if self.needs(a) {
                        self.accumulate(a, grad.scale(c));
                    }
                }
                Op::AddScalar(a, _) => {
                    if self.needs(a) {
                        self.accumulate(a, grad.clone());
                    }
                }
                Op::Relu(a) => {
                    if self.needs(a) {
                        // Subgradient 0 at exactly 0.
                        let mask = self.nodes[a.0]
                            .value
                            .map(|v| if v > F::zero() { F::one() } else { F::zero() });
                        self.accumulate(a, grad.hadamard(&mask)?);
                    }
                }
                Op::Sigmoid(a) => {
                    if self.needs(a) {
                        let y = &self.nodes[idx].value;
                        let dy = y.map(|v| v * (F::one() - v));
                        self.accumulate(a, grad.hadamard(&dy)?);
                    }
                }
                Op::Log(a) => {
                    if self.needs(a) {
                        let dx = self.nodes[a.0].value.map(|v| v.recip());
                        self.accumulate(a, grad.hadamard(&dx)?);
                    }
                }
                Op::Square(a) => {
                    if self.needs(a) {
                        let two_x = self.nodes[a.0].value.scale(F::of(2.0));
                        self.accumulate(a, grad.hadamard(&two_x)?);
                    }
                }
                Op::Recip(a) => {
                    if self.needs(a) {
                        let y = &self.nodes[idx].value;
                        let dy = y.map(|v| -(v * v));
                        self.accumulate(a, grad.hadamard(&dy)?);
                    }
                }
                Op::Clamp(a, lo, hi) => {
                    if self.needs(a) {
                        let mask = self.nodes[a.0].value.map(|v| {
                            if v >= lo && v <= hi {
                                F::one()
                            } else {
                                F::zero()
                            }
                        });
                        self.accumulate(a, grad.hadamard(&mask)?);
                    }
                }
                Op::RowSoftmax(a) => {
                    if self.needs(a) {
                        let y = &self.nodes[idx].value;
                        let mut dx = Tensor::zeros(y.rows(), y.cols());
                        for i in 0..y.rows() {
                            let mut dot = F::zero();
                            for j in 0..y.cols() {
                                dot += grad.get(i, j) * y.get(i, j);
                            }
                            for j in 0..y.cols() {
                                dx.set(i, j, y.get(i, j) * (grad.get(i, j) - dot));
                            }
                        }
                        self.accumulate(a, dx);
                    }
                }
                Op::Sum(a) => {
                    if self.needs(a) {
                        let src = &self.nodes[a.0].value;
                        let g = Tensor::filled(src.rows(), src.cols(), grad.item());
                        self.accumulate(a, g);
                    }
                }
                Op::SumAxis0(a) => {
                    if self.needs(a) {
                        let src = &self.nodes[a.0].value;
                        let mut g = Tensor::zeros(src.rows(), src.cols());
                        for i in 0..src.rows() {
                            for j in 0..src.cols() {
                                g.set(i, j, grad.get(0, j));
                            }
                        }
                        self.accumulate(a, g);
                    }
                }
                Op::SumAxis1(a) => {
                    if self.needs(a) {
                        let src = &self.nodes[a.0].value;
                        let mut g = Tensor::zeros(src.rows(), src.cols());
                        for i in 0..src.rows() {
                            for j in 0..src.cols() {
                                g.set(i, j, grad.get(i, 0));
                            }
                        }
                        self.accumulate(a, g);
                    }
                }
                Op::AddRowVec(a, v) => {
                    if self.needs(a) {
                        self.accumulate(a, grad.clone());
                    }
                    if self.needs(v) {
                        let mut dv = Tensor::zeros(1, grad.cols());
                        for i in 0..grad.rows() {
                            for j in 0..grad.cols() {
                                let val = dv.get(0, j) + grad.get(i, j);
                                dv.set(0, j, val);
                            }
                        }
                        self.accumulate(v, dv);
                    }
                }
                Op::AddColVec(a, v) => {
                    if self.needs(a) {
                        self.accumulate(a, grad.clone());
                    }
                    if self.needs(v) {
                        let mut dv = Tensor::zeros(grad.rows(), 1);
                        for i in 0..grad.rows() {
                            let mut acc = F::zero();
                            for j in 0..grad.cols() {
                                acc += grad.get(i, j);
                            }
                            dv.set(i, 0, acc);
                        }
                        self.accumulate(v, dv);
                    }
                }
                Op::MulRowVec(a, v) => {
                    let x = self.nodes[a.0].value.clone();
                    let r = self.nodes[v.0].value.clone();
                    if self.needs(a) {
                        let mut da = grad.clone();
                        for i in 0..da.rows() {
                            for j in 0..da.cols() {
                                let val = da.get(i, j) * r.get(0, j);
                                da.set(i, j, val);
                            }
                        }
                        self.accumulate(a, da);
                    }
                    if self.needs(v) {
                        let mut dv = Tensor::zeros(1, x.cols());
                        for i in 0..x.rows() {
                            for j in 0..x.cols() {
                                let val = dv.get(0, j) + grad.get(i, j) * x.get(i, j);
                                dv.set(0, j, val);
                            }
                        }
                        self.accumulate(v, dv);
                    }
                }
                Op::MulColVec(a, v) => {
                    let x = self.nodes[a.0].value.clone();
                    let c = self.nodes[v.0].value.clone();
                    if self.needs(a) {
                        let mut da = grad.clone();
                        for i in 0..da.rows() {
                            for j in 0..da.cols() {
                                let val = da.get(i, j) * c.get(i, 0);
                                da.set(i, j, val);
                            }
                        }
                        self.accumulate(a, da);
                    }
                    if self.needs(v) {
                        let mut dv = Tensor::zeros(x.rows(), 1);
                        for i in 0..x.rows() {
                            let mut acc = F::zero();
                            for j in 0..x.cols() {
                                acc += grad.get(i, j) * x.get(i, j);
                            }
                            dv.set(i, 0, acc);
                        }
                        self.accumulate(v, dv);
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let cols = self.nodes[p.0].value.cols();
                        if self.needs(p) {
                            let mut dp = Tensor::zeros(grad.rows(), cols);
                            for i in 0..grad.rows() {
                                for j in 0..cols {
                                    dp.set(i, j, grad.get(i, offset + j));
                                }
                            }
                            self.accumulate(p, dp);
                        }
                        offset += cols;
                    }
                }
            }
            // Keep the root's gradient readable after the pass.
            self.nodes[idx].grad = Some(grad);
        }
        Ok(())
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn accumulate(&mut self, v: Var, contribution: Tensor<F>) {
        debug_assert!(
            self.nodes[v.0].value.same_shape(&contribution),
            "gradient shape mismatch"
        );
        match &mut self.nodes[v.0].grad {
            Some(g) => {
                for (dst, src) in g.data_mut().iter_mut().zip(contribution.data()) {
                    *dst += *src;
                }
            }
            slot @ None => *slot = Some(contribution),
        }
    }
}
