//! Reverse-mode differentiation over dense 2-D tensors.
//!
//! A [`Tape`] records every primitive as it is evaluated. [`Tape::backward`]
//! walks the record in reverse and returns gradients for every node that
//! depends on a leaf. Index selections ([`Tape::gather_rows`]) are constants,
//! so nearest-neighbour correspondences computed outside the tape are
//! detached.

mod adam;
mod check;
mod tensor;

use std::rc::Rc;

pub use adam::Adam;
pub use check::{grad_check, GradCheck};
pub use tensor::{SparseMatrix, Tensor};

use crate::error::{Error, Result};

/// Handle to a node of a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(Rc<SparseMatrix>, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Neg(Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    Abs(Var),
    Softplus(Var),
    Sigmoid(Var),
    Clamp(Var, f64, f64),
    ColumnSoftmax(Var),
    RowSum(Var),
    ColSum(Var),
    Sum(Var),
    Mean(Var),
    RowNorm(Var),
    RowDot(Var, Var),
    GatherRows(Var, Rc<[usize]>),
    ConcatCols(Vec<Var>),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::SpMM(..) => "spmm",
            Op::Transpose(_) => "transpose",
            Op::Add(..) => "add",
            Op::Sub(..) => "subtract",
            Op::Mul(..) => "multiply",
            Op::Div(..) => "divide",
            Op::Neg(_) => "neg",
            Op::Scale(..) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::Relu(_) => "relu",
            Op::Abs(_) => "abs",
            Op::Softplus(_) => "softplus",
            Op::Sigmoid(_) => "sigmoid",
            Op::Clamp(..) => "clamp",
            Op::ColumnSoftmax(_) => "column_softmax",
            Op::RowSum(_) => "row_sum",
            Op::ColSum(_) => "col_sum",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::RowNorm(_) => "l2_norm",
            Op::RowDot(..) => "dot",
            Op::GatherRows(..) => "gather",
            Op::ConcatCols(_) => "concat",
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Record of evaluated primitives.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    record_decisions: bool,
    decisions: Vec<u64>,
}

/// Gradients of a scalar with respect to every node of a tape.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// `None` when the output does not depend on `v`.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }

    /// Gradient for `v`, zero-filled when the output does not depend on it.
    pub fn wrt(&self, v: Var) -> Tensor {
        self.grads[v.0].clone().unwrap_or_else(|| {
            let (r, c) = self.shapes[v.0];
            Tensor::zeros(r, c)
        })
    }
}

fn broadcast_shape(op: &'static str, a: (usize, usize), b: (usize, usize)) -> Result<(usize, usize)> {
    let dim = |x: usize, y: usize| {
        if x == y || y == 1 {
            Some(x)
        } else if x == 1 {
            Some(y)
        } else {
            None
        }
    };
    match (dim(a.0, b.0), dim(a.1, b.1)) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => Err(Error::shape(
            op,
            format!("cannot broadcast {}x{} with {}x{}", a.0, a.1, b.0, b.1),
        )),
    }
}

/// Sums `g` over the dimensions along which a `shape` operand was broadcast.
fn reduce_to(g: &Tensor, shape: (usize, usize)) -> Tensor {
    if g.shape() == shape {
        return g.clone();
    }
    let mut out = Tensor::zeros(shape.0, shape.1);
    let (r, c) = g.shape();
    for i in 0..r {
        for j in 0..c {
            let oi = if shape.0 == 1 { 0 } else { i };
            let oj = if shape.1 == 1 { 0 } else { j };
            let k = oi * shape.1 + oj;
            out.data_mut()[k] += g.get(i, j);
        }
    }
    out
}

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// A tape that also records every discrete branch taken (relu and clamp
    /// regions, gather indices, zero norms); used by [`grad_check`].
    pub fn recording() -> Self {
        Tape {
            record_decisions: true,
            ..Tape::default()
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn decisions(&self) -> &[u64] {
        &self.decisions
    }

    fn decide(&mut self, code: impl IntoIterator<Item = u64>) {
        if self.record_decisions {
            self.decisions.extend(code);
        }
    }

    /// Differentiable input.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, value: Tensor, op: Op) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(op.name().to_string()));
        }
        let needs_grad = match &op {
            Op::Leaf => false,
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) | Op::RowDot(a, b) => {
                self.needs(*a) || self.needs(*b)
            }
            Op::SpMM(_, a)
            | Op::Transpose(a)
            | Op::Neg(a)
            | Op::Scale(a, _)
            | Op::AddScalar(a)
            | Op::Relu(a)
            | Op::Abs(a)
            | Op::Softplus(a)
            | Op::Sigmoid(a)
            | Op::Clamp(a, ..)
            | Op::ColumnSoftmax(a)
            | Op::RowSum(a)
            | Op::ColSum(a)
            | Op::Sum(a)
            | Op::Mean(a)
            | Op::RowNorm(a)
            | Op::GatherRows(a, _) => self.needs(*a),
            Op::ConcatCols(vs) => vs.iter().any(|v| self.needs(*v)),
        };
        self.nodes.push(Node { value, op, needs_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.rows() {
            return Err(Error::shape(
                "matmul",
                format!("{}x{} times {}x{}", x.rows(), x.cols(), y.rows(), y.cols()),
            ));
        }
        let out = x.matmul(y);
        self.push(out, Op::MatMul(a, b))
    }

    /// Constant sparse matrix times `x`.
    pub fn spmm(&mut self, s: &Rc<SparseMatrix>, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if s.shape().1 != xv.rows() {
            return Err(Error::shape(
                "spmm",
                format!("{}x{} times {}x{}", s.shape().0, s.shape().1, xv.rows(), xv.cols()),
            ));
        }
        let out = s.mul_dense(xv);
        self.push(out, Op::SpMM(Rc::clone(s), x))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a))
    }

    fn binary(&mut self, name: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (x, y) = (self.value(a), self.value(b));
        let (r, c) = broadcast_shape(name, x.shape(), y.shape())?;
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                data.push(f(x.bget(i, j), y.bget(i, j)));
            }
        }
        Tensor::new(r, c, data)
    }

    /// Elementwise sum with row/column/scalar broadcasting.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary("add", a, b, |x, y| x + y)?;
        self.push(out, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary("subtract", a, b, |x, y| x - y)?;
        self.push(out, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary("multiply", a, b, |x, y| x * y)?;
        self.push(out, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary("divide", a, b, |x, y| x / y)?;
        self.push(out, Op::Div(a, b))
    }

    pub fn neg(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|v| -v);
        self.push(out, Op::Neg(a))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var> {
        let out = self.value(a).map(|v| v * s);
        self.push(out, Op::Scale(a, s))
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Result<Var> {
        let out = self.value(a).map(|v| v + s);
        self.push(out, Op::AddScalar(a))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let out = x.map(|v| v.max(0.0));
        if self.record_decisions {
            let codes: Vec<u64> = x.data().iter().map(|&v| region(v, 0.0)).collect();
            self.decide(codes);
        }
        self.push(out, Op::Relu(a))
    }

    /// Elementwise `|x|`; the subgradient at zero is zero.
    pub fn abs(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let out = x.map(f64::abs);
        if self.record_decisions {
            let codes: Vec<u64> = x.data().iter().map(|&v| region(v, 0.0)).collect();
            self.decide(codes);
        }
        self.push(out, Op::Abs(a))
    }

    /// `ln(1 + e^x)`, evaluated stably.
    pub fn softplus(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(softplus);
        self.push(out, Op::Softplus(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        let x = self.value(a);
        let out = x.map(|v| v.clamp(lo, hi));
        if self.record_decisions {
            let codes: Vec<u64> = x.data().iter().map(|&v| region(v, lo) * 3 + region(v, hi)).collect();
            self.decide(codes);
        }
        self.push(out, Op::Clamp(a, lo, hi))
    }

    /// Softmax down each column, so every column sums to one.
    pub fn column_softmax(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let (r, c) = x.shape();
        let mut out = Tensor::zeros(r, c);
        for j in 0..c {
            let max = (0..r).map(|i| x.get(i, j)).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for i in 0..r {
                let e = (x.get(i, j) - max).exp();
                out.set(i, j, e);
                total += e;
            }
            for i in 0..r {
                out.set(i, j, out.get(i, j) / total);
            }
        }
        self.push(out, Op::ColumnSoftmax(a))
    }

    /// Sum of each row, as an `r×1` column.
    pub fn row_sum(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let out = Tensor::column((0..x.rows()).map(|i| x.row(i).iter().sum()).collect());
        self.push(out, Op::RowSum(a))
    }

    /// Sum of each column, as a `1×c` row.
    pub fn col_sum(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let mut out = Tensor::zeros(1, x.cols());
        for i in 0..x.rows() {
            for (o, v) in out.data_mut().iter_mut().zip(x.row(i)) {
                *o += v;
            }
        }
        self.push(out, Op::ColSum(a))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(a).data().iter().sum());
        self.push(out, Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        if x.is_empty() {
            return Err(Error::shape("mean", "empty tensor"));
        }
        let out = Tensor::scalar(x.data().iter().sum::<f64>() / x.len() as f64);
        self.push(out, Op::Mean(a))
    }

    /// Euclidean norm of each row, as an `r×1` column.
    pub fn l2_norm(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let out = Tensor::column(
            (0..x.rows())
                .map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect(),
        );
        if self.record_decisions {
            let codes: Vec<u64> = out.data().iter().map(|&n| u64::from(n == 0.0)).collect();
            self.decide(codes);
        }
        self.push(out, Op::RowNorm(a))
    }

    /// Row-wise inner product of equally shaped operands, as an `r×1` column.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(Error::shape(
                "dot",
                format!("{}x{} vs {}x{}", x.rows(), x.cols(), y.rows(), y.cols()),
            ));
        }
        let out = Tensor::column(
            (0..x.rows())
                .map(|i| x.row(i).iter().zip(y.row(i)).map(|(p, q)| p * q).sum())
                .collect(),
        );
        self.push(out, Op::RowDot(a, b))
    }

    /// Rows of `a` selected by constant indices (repeats allowed).
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var> {
        let x = self.value(a);
        if let Some(&bad) = indices.iter().find(|&&i| i >= x.rows()) {
            return Err(Error::shape("gather", format!("row {bad} of {}", x.rows())));
        }
        let mut data = Vec::with_capacity(indices.len() * x.cols());
        for &i in indices {
            data.extend_from_slice(x.row(i));
        }
        let out = Tensor::new(indices.len(), x.cols(), data)?;
        self.decide(indices.iter().map(|&i| i as u64));
        self.push(out, Op::GatherRows(a, indices.into()))
    }

    /// Horizontal concatenation of equally tall operands.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::shape("concat", "no operands"));
        };
        let rows = self.value(first).rows();
        if let Some(bad) = parts.iter().find(|&&p| self.value(p).rows() != rows) {
            return Err(Error::shape(
                "concat",
                format!("{} rows vs {rows}", self.value(*bad).rows()),
            ));
        }
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(i));
            }
        }
        let out = Tensor::new(rows, cols, data)?;
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    /// Reverse sweep from a `1×1` output.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        if self.shape(output) != (1, 1) {
            let (r, c) = self.shape(output);
            return Err(Error::shape(
                "backward",
                format!("output is {r}x{c}, expected a scalar"),
            ));
        }
        let n = self.nodes.len();
        let mut grads: Vec<Option<Tensor>> = vec![None; n];
        grads[output.0] = Some(Tensor::scalar(1.0));
        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad && !matches!(node.op, Op::Leaf) {
                grads[idx] = Some(g);
                continue;
            }
            let mut acc = |v: Var, t: Tensor| -> Result<()> {
                if !self.needs(v) {
                    return Ok(());
                }
                if !t.is_finite() {
                    return Err(Error::NonFinite(format!("backward of {}", node.op.name())));
                }
                match &mut grads[v.0] {
                    Some(existing) => existing.add_assign(&t),
                    slot => *slot = Some(t),
                }
                Ok(())
            };
            let out = &node.value;
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    if self.needs(*a) {
                        acc(*a, g.matmul(&bv.transpose()))?;
                    }
                    if self.needs(*b) {
                        acc(*b, av.transpose().matmul(&g))?;
                    }
                }
                Op::SpMM(s, a) => acc(*a, s.transpose_mul_dense(&g))?,
                Op::Transpose(a) => acc(*a, g.transpose())?,
                Op::Add(a, b) => {
                    acc(*a, reduce_to(&g, self.shape(*a)))?;
                    acc(*b, reduce_to(&g, self.shape(*b)))?;
                }
                Op::Sub(a, b) => {
                    acc(*a, reduce_to(&g, self.shape(*a)))?;
                    acc(*b, reduce_to(&g.map(|v| -v), self.shape(*b)))?;
                }
                Op::Mul(a, b) | Op::Div(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let is_div = matches!(node.op, Op::Div(..));
                    let (r, c) = g.shape();
                    let mut ga = Tensor::zeros(r, c);
                    let mut gb = Tensor::zeros(r, c);
                    for i in 0..r {
                        for j in 0..c {
                            let (x, y, gij) = (av.bget(i, j), bv.bget(i, j), g.get(i, j));
                            if is_div {
                                ga.set(i, j, gij / y);
                                gb.set(i, j, -gij * x / (y * y));
                            } else {
                                ga.set(i, j, gij * y);
                                gb.set(i, j, gij * x);
                            }
                        }
                    }
                    acc(*a, reduce_to(&ga, av.shape()))?;
                    acc(*b, reduce_to(&gb, bv.shape()))?;
                }
                Op::Neg(a) => acc(*a, g.map(|v| -v))?,
                Op::Scale(a, s) => acc(*a, g.map(|v| v * s))?,
                Op::AddScalar(a) => acc(*a, g.clone())?,
                Op::Relu(a) => {
                    let x = self.value(*a);
                    acc(*a, zip(&g, x, |gv, xv| if xv > 0.0 { gv } else { 0.0 }))?;
                }
                Op::Abs(a) => {
                    let x = self.value(*a);
                    acc(*a, zip(&g, x, |gv, xv| gv * sign(xv)))?;
                }
                Op::Softplus(a) => {
                    let x = self.value(*a);
                    acc(*a, zip(&g, x, |gv, xv| gv * sigmoid(xv)))?;
                }
                Op::Sigmoid(a) => acc(*a, zip(&g, out, |gv, s| gv * s * (1.0 - s)))?,
                Op::Clamp(a, lo, hi) => {
                    let x = self.value(*a);
                    let (lo, hi) = (*lo, *hi);
                    acc(*a, zip(&g, x, |gv, xv| if xv > lo && xv < hi { gv } else { 0.0 }))?;
                }
                Op::ColumnSoftmax(a) => {
                    let (r, c) = out.shape();
                    let mut gi = Tensor::zeros(r, c);
                    for j in 0..c {
                        let inner: f64 = (0..r).map(|i| out.get(i, j) * g.get(i, j)).sum();
                        for i in 0..r {
                            gi.set(i, j, out.get(i, j) * (g.get(i, j) - inner));
                        }
                    }
                    acc(*a, gi)?;
                }
                Op::RowSum(a) => {
                    let (r, c) = self.shape(*a);
                    let mut gi = Tensor::zeros(r, c);
                    for i in 0..r {
                        for j in 0..c {
                            gi.set(i, j, g.get(i, 0));
                        }
                    }
                    acc(*a, gi)?;
                }
                Op::ColSum(a) => {
                    let (r, c) = self.shape(*a);
                    let mut gi = Tensor::zeros(r, c);
                    for i in 0..r {
                        for j in 0..c {
                            gi.set(i, j, g.get(0, j));
                        }
                    }
                    acc(*a, gi)?;
                }
                Op::Sum(a) => {
                    let (r, c) = self.shape(*a);
                    acc(*a, Tensor::filled(r, c, g.item()))?;
                }
                Op::Mean(a) => {
                    let (r, c) = self.shape(*a);
                    acc(*a, Tensor::filled(r, c, g.item() / (r * c) as f64))?;
                }
                Op::RowNorm(a) => {
                    let x = self.value(*a);
                    let (r, c) = x.shape();
                    let mut gi = Tensor::zeros(r, c);
                    for i in 0..r {
                        let n = out.get(i, 0);
                        if n > 0.0 {
                            for j in 0..c {
                                gi.set(i, j, g.get(i, 0) * x.get(i, j) / n);
                            }
                        }
                    }
                    acc(*a, gi)?;
                }
                Op::RowDot(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (r, c) = av.shape();
                    let mut ga = Tensor::zeros(r, c);
                    let mut gb = Tensor::zeros(r, c);
                    for i in 0..r {
                        let gi = g.get(i, 0);
                        for j in 0..c {
                            ga.set(i, j, gi * bv.get(i, j));
                            gb.set(i, j, gi * av.get(i, j));
                        }
                    }
                    acc(*a, ga)?;
                    acc(*b, gb)?;
                }
                Op::GatherRows(a, indices) => {
                    let (r, c) = self.shape(*a);
                    let mut gi = Tensor::zeros(r, c);
                    for (k, &src) in indices.iter().enumerate() {
                        for j in 0..c {
                            let v = gi.get(src, j) + g.get(k, j);
                            gi.set(src, j, v);
                        }
                    }
                    acc(*a, gi)?;
                }
                Op::ConcatCols(parts) => {
                    let rows = g.rows();
                    let mut offset = 0;
                    for &p in parts {
                        let c = self.shape(p).1;
                        let mut gp = Tensor::zeros(rows, c);
                        for i in 0..rows {
                            for j in 0..c {
                                gp.set(i, j, g.get(i, offset + j));
                            }
                        }
                        offset += c;
                        acc(p, gp)?;
                    }
                }
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape()).collect(),
        })
    }
}

fn zip(g: &Tensor, x: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = g.data().iter().zip(x.data()).map(|(&a, &b)| f(a, b)).collect();
    Tensor::new(g.rows(), g.cols(), data).expect("same shape")
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// 0 below, 1 above, 2 exactly at `at`.
fn region(v: f64, at: f64) -> u64 {
    if v < at {
        0
    } else if v > at {
        1
    } else {
        2
    }
}
