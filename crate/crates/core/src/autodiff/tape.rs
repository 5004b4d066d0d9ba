use std::cell::RefCell;

use crate::scalar::Real;

use super::{AdError, Tensor};

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Constant,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    Scale(usize, T),
    AddScalar(usize),
    AddBias(usize, usize),
    Matmul(usize, usize),
    Conv1d {
        x: usize,
        w: usize,
        b: Option<usize>,
        stride: usize,
    },
    Pad1d {
        x: usize,
        left: usize,
    },
    Upsample1d {
        x: usize,
        factor: usize,
    },
    LeakyRelu(usize, T),
    Exp(usize),
    Log(usize),
    Square(usize),
    Sum(usize),
    Mean(usize),
    Reshape(usize),
    Narrow {
        x: usize,
        axis: usize,
        start: usize,
    },
    Concat {
        inputs: Vec<usize>,
        axis: usize,
    },
}

struct Node<T> {
    op: Op<T>,
    value: Tensor<T>,
}

/// Append-only record of a computation. Node `k` only refers to nodes with
/// smaller ids, so a reverse sweep is a valid topological order.
pub struct Tape<T = f64> {
    nodes: RefCell<Vec<Node<T>>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t, T: Real = f64> {
    tape: &'t Tape<T>,
    id: usize,
}

impl<T: Real> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.shape())
    }
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, op: Op<T>, value: Tensor<T>, name: &'static str) -> Result<Var<'_, T>, AdError> {
        if value.data().iter().any(|v| !v.is_finite()) {
            return Err(AdError::NonFinite { op: name });
        }
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { op, value });
        Ok(Var {
            tape: self,
            id: nodes.len() - 1,
        })
    }

    /// Differentiable input.
    pub fn leaf(&self, value: Tensor<T>) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { op: Op::Leaf, value });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    /// Input that never receives a gradient.
    pub fn constant(&self, value: Tensor<T>) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { op: Op::Constant, value });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn with_value<R>(&self, id: usize, f: impl FnOnce(&Tensor<T>) -> R) -> R {
        f(&self.nodes.borrow()[id].value)
    }

    /// Reverse sweep from a scalar loss.
    pub fn backward(&self, loss: Var<'_, T>) -> Result<Gradients<T>, AdError> {
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.id].value;
        if !root.shape().is_empty() {
            return Err(AdError::NotScalar(root.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; nodes.len()];
        grads[loss.id] = Some(vec![T::one()]);
        for k in (0..=loss.id).rev() {
            let Some(g) = grads[k].take() else { continue };
            let node = &nodes[k];
            propagate(&nodes, &node.op, &node.value, &g, &mut grads);
            if matches!(node.op, Op::Leaf) {
                grads[k] = Some(g);
            }
        }
        let shapes = nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        let is_leaf = nodes.iter().map(|n| matches!(n.op, Op::Leaf)).collect();
        Ok(Gradients { grads, shapes, is_leaf })
    }
}

fn accumulate<T: Real>(grads: &mut [Option<Vec<T>>], id: usize, len: usize, f: impl Fn(&mut [T])) {
    let slot = grads[id].get_or_insert_with(|| vec![T::zero(); len]);
    f(slot);
}

fn propagate<T: Real>(nodes: &[Node<T>], op: &Op<T>, out: &Tensor<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
    let val = |id: usize| &nodes[id].value;
    let len = |id: usize| nodes[id].value.len();
    let is_const = |id: usize| matches!(nodes[id].op, Op::Constant);
    // Gradient of a possibly scalar-broadcast operand.
    let reduce_into = |grads: &mut [Option<Vec<T>>], id: usize, contrib: &dyn Fn(usize) -> T| {
        if is_const(id) {
            return;
        }
        let n = len(id);
        if n == 1 && g.len() != 1 {
            let total = (0..g.len()).fold(T::zero(), |acc, i| acc + contrib(i));
            accumulate(grads, id, 1, |s| s[0] += total);
        } else {
            accumulate(grads, id, n, |s| {
                for (i, v) in s.iter_mut().enumerate() {
                    *v += contrib(i);
                }
            });
        }
    };
    match *op {
        Op::Leaf | Op::Constant => {}
        Op::Add(a, b) => {
            reduce_into(grads, a, &|i| g[i]);
            reduce_into(grads, b, &|i| g[i]);
        }
        Op::Sub(a, b) => {
            reduce_into(grads, a, &|i| g[i]);
            reduce_into(grads, b, &|i| -g[i]);
        }
        Op::Mul(a, b) => {
            let (va, vb) = (val(a).data(), val(b).data());
            let pick = |v: &[T], i: usize| if v.len() == 1 { v[0] } else { v[i] };
            reduce_into(grads, a, &|i| g[i] * pick(vb, i));
            reduce_into(grads, b, &|i| g[i] * pick(va, i));
        }
        Op::Neg(a) => reduce_into(grads, a, &|i| -g[i]),
        Op::Scale(a, c) => reduce_into(grads, a, &|i| g[i] * c),
        Op::AddScalar(a) => reduce_into(grads, a, &|i| g[i]),
        Op::AddBias(x, b) => {
            reduce_into(grads, x, &|i| g[i]);
            if !is_const(b) {
                let f = len(b);
                accumulate(grads, b, f, |s| {
                    for (i, gi) in g.iter().enumerate() {
                        s[i % f] += *gi;
                    }
                });
            }
        }
        Op::Matmul(a, b) => {
            let (va, vb) = (val(a), val(b));
            let (m, k) = (va.shape()[0], va.shape()[1]);
            let n = vb.shape()[1];
            if !is_const(a) {
                accumulate(grads, a, m * k, |s| {
                    for i in 0..m {
                        for p in 0..k {
                            let mut acc = T::zero();
                            for j in 0..n {
                                acc += g[i * n + j] * vb.data()[p * n + j];
                            }
                            s[i * k + p] += acc;
                        }
                    }
                });
            }
            if !is_const(b) {
                accumulate(grads, b, k * n, |s| {
                    for i in 0..m {
                        for p in 0..k {
                            let x = va.data()[i * k + p];
                            let row = &g[i * n..(i + 1) * n];
                            for (sv, &gv) in s[p * n..(p + 1) * n].iter_mut().zip(row) {
                                *sv += x * gv;
                            }
                        }
                    }
                });
            }
        }
        Op::Conv1d { x, w, b, stride } => {
            let (vx, vw) = (val(x), val(w));
            let (batch, cin, l) = conv_dims(vx.shape());
            let (cout, _, kw) = (vw.shape()[0], vw.shape()[1], vw.shape()[2]);
            let lo = out.shape()[out.shape().len() - 1];
            if !is_const(x) {
                accumulate(grads, x, vx.len(), |s| {
                    for nb in 0..batch {
                        for o in 0..cout {
                            for t in 0..lo {
                                let gv = g[(nb * cout + o) * lo + t];
                                for c in 0..cin {
                                    let wrow = &vw.data()[(o * cin + c) * kw..(o * cin + c + 1) * kw];
                                    let base = (nb * cin + c) * l + t * stride;
                                    for (sv, &wv) in s[base..base + kw].iter_mut().zip(wrow) {
                                        *sv += wv * gv;
                                    }
                                }
                            }
                        }
                    }
                });
            }
            if !is_const(w) {
                accumulate(grads, w, vw.len(), |s| {
                    for nb in 0..batch {
                        for o in 0..cout {
                            for t in 0..lo {
                                let gv = g[(nb * cout + o) * lo + t];
                                for c in 0..cin {
                                    let base = (nb * cin + c) * l + t * stride;
                                    let xs = &vx.data()[base..base + kw];
                                    let wbase = (o * cin + c) * kw;
                                    for (sv, &xv) in s[wbase..wbase + kw].iter_mut().zip(xs) {
                                        *sv += xv * gv;
                                    }
                                }
                            }
                        }
                    }
                });
            }
            if let Some(b) = b.filter(|&b| !is_const(b)) {
                accumulate(grads, b, cout, |s| {
                    for nb in 0..batch {
                        for (o, sv) in s.iter_mut().enumerate() {
                            let row = &g[(nb * cout + o) * lo..(nb * cout + o + 1) * lo];
                            *sv += row.iter().copied().sum::<T>();
                        }
                    }
                });
            }
        }
        Op::Pad1d { x, left } => {
            if !is_const(x) {
                let vx = val(x);
                let l = vx.shape()[vx.shape().len() - 1];
                let lo = out.shape()[out.shape().len() - 1];
                accumulate(grads, x, vx.len(), |s| {
                    for (r, row) in s.chunks_exact_mut(l).enumerate() {
                        for (t, sv) in row.iter_mut().enumerate() {
                            *sv += g[r * lo + left + t];
                        }
                    }
                });
            }
        }
        Op::Upsample1d { x, factor } => {
            if !is_const(x) {
                let vx = val(x);
                accumulate(grads, x, vx.len(), |s| {
                    for (i, sv) in s.iter_mut().enumerate() {
                        *sv += g[i * factor];
                    }
                });
            }
        }
        Op::LeakyRelu(x, slope) => {
            let vx = val(x).data();
            reduce_into(grads, x, &|i| if vx[i] > T::zero() { g[i] } else { g[i] * slope });
        }
        Op::Exp(x) => {
            let vo = out.data();
            reduce_into(grads, x, &|i| g[i] * vo[i]);
        }
        Op::Log(x) => {
            let vx = val(x).data();
            reduce_into(grads, x, &|i| g[i] / vx[i]);
        }
        Op::Square(x) => {
            let vx = val(x).data();
            reduce_into(grads, x, &|i| g[i] * T::lit(2.0) * vx[i]);
        }
        Op::Sum(x) => {
            if !is_const(x) {
                accumulate(grads, x, len(x), |s| s.iter_mut().for_each(|v| *v += g[0]));
            }
        }
        Op::Mean(x) => {
            if !is_const(x) {
                let n = len(x);
                let share = g[0] / T::from_usize_lossy(n);
                accumulate(grads, x, n, |s| s.iter_mut().for_each(|v| *v += share));
            }
        }
        Op::Reshape(x) => reduce_into(grads, x, &|i| g[i]),
        Op::Narrow { x, axis, start } => {
            if !is_const(x) {
                let shape = val(x).shape();
                let (outer, inner) = split_axis(shape, axis);
                let (full, part) = (shape[axis], out.shape()[axis]);
                accumulate(grads, x, len(x), |s| {
                    for o in 0..outer {
                        let src = &g[o * part * inner..(o + 1) * part * inner];
                        let dst = &mut s[(o * full + start) * inner..(o * full + start + part) * inner];
                        for (d, &v) in dst.iter_mut().zip(src) {
                            *d += v;
                        }
                    }
                });
            }
        }
        Op::Concat { ref inputs, axis } => {
            let (outer, inner) = split_axis(out.shape(), axis);
            let total = out.shape()[axis];
            let mut offset = 0;
            for &id in inputs {
                let width = val(id).shape()[axis];
                if !is_const(id) {
                    accumulate(grads, id, len(id), |s| {
                        for o in 0..outer {
                            let src = &g[(o * total + offset) * inner..(o * total + offset + width) * inner];
                            for (d, &v) in s[o * width * inner..(o + 1) * width * inner].iter_mut().zip(src) {
                                *d += v;
                            }
                        }
                    });
                }
                offset += width;
            }
        }
    }
}

/// `(outer, inner)` element counts around `axis`.
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize) {
    (shape[..axis].iter().product(), shape[axis + 1..].iter().product())
}

/// `(batch, channels, length)` of a `[C, L]` or `[N, C, L]` conv input.
fn conv_dims(shape: &[usize]) -> (usize, usize, usize) {
    match *shape {
        [c, l] => (1, c, l),
        [n, c, l] => (n, c, l),
        _ => unreachable!("validated at op construction"),
    }
}

/// Gradients from one backward sweep.
pub struct Gradients<T = f64> {
    grads: Vec<Option<Vec<T>>>,
    shapes: Vec<Vec<usize>>,
    is_leaf: Vec<bool>,
}

impl<T: Real> Gradients<T> {
    /// Gradient of the loss with respect to a leaf; zeros when the leaf does
    /// not reach the loss.
    pub fn wrt(&self, var: Var<'_, T>) -> Tensor<T> {
        assert!(self.is_leaf[var.id], "gradients are kept for leaves only");
        let shape = self.shapes[var.id].clone();
        match &self.grads[var.id] {
            Some(g) => Tensor::from_raw(shape, g.clone()),
            None => Tensor::zeros(&shape),
        }
    }
}

fn shape_err(op: &'static str, a: &[usize], b: &[usize]) -> AdError {
    AdError::Shape {
        op,
        detail: format!("{a:?} vs {b:?}"),
    }
}

impl<'t, T: Real> Var<'t, T> {
    pub fn id(&self) -> usize {
        self.id
    }

    /// Tape this variable lives on.
    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn value(&self) -> Tensor<T> {
        self.tape.with_value(self.id, Tensor::clone)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.with_value(self.id, |v| v.shape().to_vec())
    }

    /// Value of a one-element variable.
    pub fn item(&self) -> T {
        self.tape.with_value(self.id, Tensor::item)
    }

    fn same_tape(&self, other: &Var<'_, T>) {
        assert!(std::ptr::eq(self.tape, other.tape), "variables from different tapes");
    }

    fn binary(self, other: Var<'t, T>, name: &'static str, op: Op<T>, f: impl Fn(T, T) -> T) -> Result<Self, AdError> {
        self.same_tape(&other);
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id].value, &nodes[other.id].value);
            if a.shape() == b.shape() {
                let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
                Tensor::from_raw(a.shape().to_vec(), data)
            } else if b.shape().is_empty() {
                let y = b.data()[0];
                a.map(|x| f(x, y))
            } else if a.shape().is_empty() {
                let x = a.data()[0];
                b.map(|y| f(x, y))
            } else {
                return Err(shape_err(name, a.shape(), b.shape()));
            }
        };
        self.tape.push(op, value, name)
    }

    fn unary(self, name: &'static str, op: Op<T>, f: impl Fn(T) -> T) -> Result<Self, AdError> {
        let value = self.tape.with_value(self.id, |v| v.map(f));
        self.tape.push(op, value, name)
    }

    pub fn add(self, other: Var<'t, T>) -> Result<Self, AdError> {
        self.binary(other, "add", Op::Add(self.id, other.id), |x, y| x + y)
    }

    pub fn sub(self, other: Var<'t, T>) -> Result<Self, AdError> {
        self.binary(other, "sub", Op::Sub(self.id, other.id), |x, y| x - y)
    }

    /// Elementwise product; either side may be a scalar.
    pub fn mul(self, other: Var<'t, T>) -> Result<Self, AdError> {
        self.binary(other, "mul", Op::Mul(self.id, other.id), |x, y| x * y)
    }

    pub fn neg(self) -> Result<Self, AdError> {
        self.unary("neg", Op::Neg(self.id), |x| -x)
    }

    /// Multiplies by a constant.
    pub fn scale(self, c: T) -> Result<Self, AdError> {
        self.unary("scale", Op::Scale(self.id, c), |x| x * c)
    }

    /// Adds a constant.
    pub fn add_scalar(self, c: T) -> Result<Self, AdError> {
        self.unary("add_scalar", Op::AddScalar(self.id), |x| x + c)
    }

    /// `[N, F] + [F]`, the bias of a dense layer.
    pub fn add_bias(self, bias: Var<'t, T>) -> Result<Self, AdError> {
        self.same_tape(&bias);
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (x, b) = (&nodes[self.id].value, &nodes[bias.id].value);
            match (x.shape(), b.shape()) {
                ([_, f], [fb]) if f == fb => {
                    let data = x.data().iter().enumerate().map(|(i, &v)| v + b.data()[i % f]).collect();
                    Tensor::from_raw(x.shape().to_vec(), data)
                }
                _ => return Err(shape_err("add_bias", x.shape(), b.shape())),
            }
        };
        self.tape.push(Op::AddBias(self.id, bias.id), value, "add_bias")
    }

    /// `[m, k] x [k, n] -> [m, n]`.
    pub fn matmul(self, other: Var<'t, T>) -> Result<Self, AdError> {
        self.same_tape(&other);
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id].value, &nodes[other.id].value);
            let (m, k, n) = match (a.shape(), b.shape()) {
                (&[m, k], &[k2, n]) if k == k2 => (m, k, n),
                _ => return Err(shape_err("matmul", a.shape(), b.shape())),
            };
            let mut out = vec![T::zero(); m * n];
            for i in 0..m {
                let row = &mut out[i * n..(i + 1) * n];
                for p in 0..k {
                    let x = a.data()[i * k + p];
                    for (o, &y) in row.iter_mut().zip(&b.data()[p * n..(p + 1) * n]) {
                        *o += x * y;
                    }
                }
            }
            Tensor::from_raw(vec![m, n], out)
        };
        self.tape.push(Op::Matmul(self.id, other.id), value, "matmul")
    }

    /// Valid 1-D convolution (cross-correlation) of `[C_in, L]` or
    /// `[N, C_in, L]` with weights `[C_out, C_in, K]` and optional bias
    /// `[C_out]`. Output length is `(L - K) / stride + 1`.
    pub fn conv1d(self, weight: Var<'t, T>, bias: Option<Var<'t, T>>, stride: usize) -> Result<Self, AdError> {
        self.same_tape(&weight);
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (x, w) = (&nodes[self.id].value, &nodes[weight.id].value);
            let bad = || shape_err("conv1d", x.shape(), w.shape());
            let (batch, cin, l) = match *x.shape() {
                [c, l] => (1, c, l),
                [n, c, l] => (n, c, l),
                _ => return Err(bad()),
            };
            let (cout, kw) = match *w.shape() {
                [o, c, k] if c == cin && k >= 1 => (o, k),
                _ => return Err(bad()),
            };
            if stride == 0 || l < kw {
                return Err(AdError::Shape {
                    op: "conv1d",
                    detail: format!("input length {l} with kernel {kw}, stride {stride}"),
                });
            }
            let b = match bias {
                Some(bv) => {
                    self.same_tape(&bv);
                    let b = &nodes[bv.id].value;
                    if b.shape() != [cout] {
                        return Err(shape_err("conv1d bias", b.shape(), &[cout]));
                    }
                    Some(b.data().to_vec())
                }
                None => None,
            };
            let lo = (l - kw) / stride + 1;
            let out = conv1d_forward(x.data(), w.data(), b.as_deref(), batch, cin, l, cout, kw, stride);
            let shape = if x.shape().len() == 2 { vec![cout, lo] } else { vec![batch, cout, lo] };
            Tensor::from_raw(shape, out)
        };
        let op = Op::Conv1d {
            x: self.id,
            w: weight.id,
            b: bias.map(|b| b.id),
            stride,
        };
        self.tape.push(op, value, "conv1d")
    }

    /// Zero padding on the last axis.
    pub fn pad1d(self, left: usize, right: usize) -> Result<Self, AdError> {
        let value = self.tape.with_value(self.id, |x| {
            let Some(&l) = x.shape().last() else {
                return Err(shape_err("pad1d", x.shape(), &[]));
            };
            let lo = l + left + right;
            let mut out = Vec::with_capacity(x.len() / l.max(1) * lo);
            for row in x.data().chunks_exact(l.max(1)) {
                out.extend(std::iter::repeat_n(T::zero(), left));
                out.extend_from_slice(row);
                out.extend(std::iter::repeat_n(T::zero(), right));
            }
            let mut shape = x.shape().to_vec();
            *shape.last_mut().expect("non-empty") = lo;
            Ok(Tensor::from_raw(shape, out))
        })?;
        self.tape.push(Op::Pad1d { x: self.id, left }, value, "pad1d")
    }

    /// Zero-insertion upsampling on the last axis: `out[i * f] = x[i]`,
    /// output length `L * f`.
    pub fn upsample1d(self, factor: usize) -> Result<Self, AdError> {
        let value = self.tape.with_value(self.id, |x| {
            if factor == 0 || x.shape().is_empty() {
                return Err(AdError::Shape {
                    op: "upsample1d",
                    detail: format!("factor {factor} on {:?}", x.shape()),
                });
            }
            let mut out = vec![T::zero(); x.len() * factor];
            for (i, &v) in x.data().iter().enumerate() {
                out[i * factor] = v;
            }
            let mut shape = x.shape().to_vec();
            *shape.last_mut().expect("non-empty") *= factor;
            Ok(Tensor::from_raw(shape, out))
        })?;
        self.tape.push(Op::Upsample1d { x: self.id, factor }, value, "upsample1d")
    }

    pub fn leaky_relu(self, slope: T) -> Result<Self, AdError> {
        self.unary("leaky_relu", Op::LeakyRelu(self.id, slope), |x| if x > T::zero() { x } else { x * slope })
    }

    pub fn exp(self) -> Result<Self, AdError> {
        self.unary("exp", Op::Exp(self.id), T::exp)
    }

    pub fn log(self) -> Result<Self, AdError> {
        self.unary("log", Op::Log(self.id), T::ln)
    }

    pub fn square(self) -> Result<Self, AdError> {
        self.unary("square", Op::Square(self.id), |x| x * x)
    }

    pub fn sum(self) -> Result<Self, AdError> {
        let value = self.tape.with_value(self.id, |x| Tensor::scalar(x.data().iter().copied().sum()));
        self.tape.push(Op::Sum(self.id), value, "sum")
    }

    pub fn mean(self) -> Result<Self, AdError> {
        let value = self.tape.with_value(self.id, |x| {
            if x.is_empty() {
                return Err(AdError::Shape {
                    op: "mean",
                    detail: "empty tensor".into(),
                });
            }
            Ok(Tensor::scalar(x.data().iter().copied().sum::<T>() / T::from_usize_lossy(x.len())))
        })?;
        self.tape.push(Op::Mean(self.id), value, "mean")
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self, AdError> {
        let value = self.tape.with_value(self.id, |x| {
            if shape.iter().product::<usize>() != x.len() {
                return Err(shape_err("reshape", x.shape(), shape));
            }
            Ok(Tensor::from_raw(shape.to_vec(), x.data().to_vec()))
        })?;
        self.tape.push(Op::Reshape(self.id), value, "reshape")
    }

    /// Slice `[start, start + len)` along `axis`.
    pub fn narrow(self, axis: usize, start: usize, len: usize) -> Result<Self, AdError> {
        let value = self.tape.with_value(self.id, |x| {
            if axis >= x.shape().len() || start + len > x.shape()[axis] {
                return Err(AdError::Shape {
                    op: "narrow",
                    detail: format!("[{start}, {}) on axis {axis} of {:?}", start + len, x.shape()),
                });
            }
            let (outer, inner) = split_axis(x.shape(), axis);
            let full = x.shape()[axis];
            let mut out = Vec::with_capacity(outer * len * inner);
            for o in 0..outer {
                out.extend_from_slice(&x.data()[(o * full + start) * inner..(o * full + start + len) * inner]);
            }
            let mut shape = x.shape().to_vec();
            shape[axis] = len;
            Ok(Tensor::from_raw(shape, out))
        })?;
        self.tape.push(Op::Narrow { x: self.id, axis, start }, value, "narrow")
    }
}

/// Concatenation along `axis`; all other dimensions must agree.
pub fn concat<'t, T: Real>(vars: &[Var<'t, T>], axis: usize) -> Result<Var<'t, T>, AdError> {
    let first = vars.first().ok_or(AdError::Shape {
        op: "concat",
        detail: "no inputs".into(),
    })?;
    let tape = first.tape;
    let value = {
        let nodes = tape.nodes.borrow();
        let base = nodes[first.id].value.shape().to_vec();
        if axis >= base.len() {
            return Err(shape_err("concat", &base, &[axis]));
        }
        let mut total = 0;
        for v in vars {
            first.same_tape(v);
            let s = nodes[v.id].value.shape();
            let compatible =
                s.len() == base.len() && s.iter().zip(&base).enumerate().all(|(d, (a, b))| d == axis || a == b);
            if !compatible {
                return Err(shape_err("concat", &base, s));
            }
            total += s[axis];
        }
        let (outer, inner) = split_axis(&base, axis);
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for v in vars {
                let t = &nodes[v.id].value;
                let w = t.shape()[axis];
                out.extend_from_slice(&t.data()[o * w * inner..(o + 1) * w * inner]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        Tensor::from_raw(shape, out)
    };
    let op = Op::Concat {
        inputs: vars.iter().map(|v| v.id).collect(),
        axis,
    };
    tape.push(op, value, "concat")
}

/// Direct convolution loop shared by the tape op. Summation order per output
/// is bias, then channel-major, then kernel tap.
#[allow(clippy::too_many_arguments)]
fn conv1d_forward<T: Real>(
    x: &[T],
    w: &[T],
    bias: Option<&[T]>,
    batch: usize,
    cin: usize,
    l: usize,
    cout: usize,
    kw: usize,
    stride: usize,
) -> Vec<T> {
    let lo = (l - kw) / stride + 1;
    let mut out = vec![T::zero(); batch * cout * lo];
    for nb in 0..batch {
        for o in 0..cout {
            let b = bias.map_or(T::zero(), |b| b[o]);
            for t in 0..lo {
                let mut acc = b;
                for c in 0..cin {
                    let xs = &x[(nb * cin + c) * l + t * stride..][..kw];
                    let ws = &w[(o * cin + c) * kw..][..kw];
                    for (&xv, &wv) in xs.iter().zip(ws) {
                        acc += xv * wv;
                    }
                }
                out[(nb * cout + o) * lo + t] = acc;
            }
        }
    }
    out
}
