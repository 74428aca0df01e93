//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Operations are recorded in execution order; `backward` sweeps the tape
//! in exact reverse order and accumulates gradients into the parameter
//! leaves. One tape spans one rollout, so gradients flow through the
//! unrolled LSTM across the whole window and truncate at its boundary.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::params::ParamVector;
use crate::tensor::{Tensor, TensorError};

/// Handle to a recorded node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Clone, Debug)]
enum Op {
    /// Leaf holding either a bound parameter (index into the
    /// [`ParamVector`] it was bound from) or a constant.
    Leaf { param: Option<usize> },
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Relu(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Log(NodeId),
    Scale(NodeId, f64),
    Sum(NodeId),
    Softmax(NodeId),
    Slice {
        x: NodeId,
        start: usize,
    },
    Affine {
        w: NodeId,
        x: NodeId,
        b: Option<NodeId>,
    },
    Conv2d {
        input: NodeId,
        kernels: NodeId,
        bias: NodeId,
        stride: usize,
    },
}

struct Node {
    op: Op,
    value: Tensor,
}

/// A recording of primitive operations with stored forward values.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    /// Records a constant leaf; no gradient is tracked for it.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf { param: None }, value)
    }

    /// Records a leaf bound to parameter `index` of a [`ParamVector`].
    /// `backward` writes this leaf's gradient into the flat slot of that
    /// parameter.
    pub fn param(&mut self, index: usize, value: Tensor) -> NodeId {
        self.push(Op::Leaf { param: Some(index) }, value)
    }

    /// Elementwise sum of two same-shaped tensors.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(TensorError::ShapeMismatch(format!(
                "add: {:?} vs {:?}",
                va.shape(),
                vb.shape()
            )));
        }
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x + y)
            .collect();
        let value = Tensor::from_parts(va.shape().to_vec(), data);
        Ok(self.push(Op::Add(a, b), value))
    }

    /// Elementwise product of two same-shaped tensors.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(TensorError::ShapeMismatch(format!(
                "mul: {:?} vs {:?}",
                va.shape(),
                vb.shape()
            )));
        }
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x * y)
            .collect();
        let value = Tensor::from_parts(va.shape().to_vec(), data);
        Ok(self.push(Op::Mul(a, b), value))
    }

    /// Elementwise `max(x, 0)`; the subgradient at exactly 0 is 0.
    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let data = v.data().iter().map(|&t| t.max(0.0)).collect();
        let value = Tensor::from_parts(v.shape().to_vec(), data);
        self.push(Op::Relu(x), value)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let data = v.data().iter().map(|&t| libm::tanh(t)).collect();
        let value = Tensor::from_parts(v.shape().to_vec(), data);
        self.push(Op::Tanh(x), value)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let data = v.data().iter().map(|&t| sigmoid(t)).collect();
        let value = Tensor::from_parts(v.shape().to_vec(), data);
        self.push(Op::Sigmoid(x), value)
    }

    /// Elementwise natural logarithm; inputs must be positive.
    pub fn log(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let data = v.data().iter().map(|&t| libm::log(t)).collect();
        let value = Tensor::from_parts(v.shape().to_vec(), data);
        self.push(Op::Log(x), value)
    }

    /// Multiplication by a compile-time constant.
    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let v = self.value(x);
        let data = v.data().iter().map(|&t| c * t).collect();
        let value = Tensor::from_parts(v.shape().to_vec(), data);
        self.push(Op::Scale(x, c), value)
    }

    /// Sum of all elements, as a scalar node.
    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let total: f64 = self.value(x).data().iter().sum();
        self.push(Op::Sum(x), Tensor::scalar(total))
    }

    /// Numerically stabilized softmax over the (flattened) vector.
    /// Every output entry is strictly positive and the outputs sum to 1.
    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let max = v.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = v.data().iter().map(|&t| libm::exp(t - max)).collect();
        let z: f64 = exps.iter().sum();
        let data = exps.into_iter().map(|e| e / z).collect();
        let value = Tensor::from_parts(v.shape().to_vec(), data);
        self.push(Op::Softmax(x), value)
    }

    /// Contiguous sub-vector `x[start .. start + len]` of the flattened
    /// input.
    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId, TensorError> {
        let v = self.value(x);
        if start + len > v.len() || len == 0 {
            return Err(TensorError::ShapeMismatch(format!(
                "slice [{start}, {}) of tensor with {} elements",
                start + len,
                v.len()
            )));
        }
        let data = v.data()[start..start + len].to_vec();
        let value = Tensor::from_parts(vec![len], data);
        Ok(self.push(Op::Slice { x, start }, value))
    }

    /// Fully connected layer `y = W x (+ b)` with `W: [m, n]`, `x` of any
    /// shape with `n` elements, optional `b: [m]`.
    pub fn affine(
        &mut self,
        w: NodeId,
        x: NodeId,
        b: Option<NodeId>,
    ) -> Result<NodeId, TensorError> {
        let vw = self.value(w);
        if vw.shape().len() != 2 {
            return Err(TensorError::ShapeMismatch(format!(
                "affine weight must be rank 2, got {:?}",
                vw.shape()
            )));
        }
        let (m, n) = (vw.shape()[0], vw.shape()[1]);
        let vx = self.value(x);
        if vx.len() != n {
            return Err(TensorError::ShapeMismatch(format!(
                "affine: weight is [{m}, {n}] but input has {} elements",
                vx.len()
            )));
        }
        if let Some(b) = b {
            let vb = self.value(b);
            if vb.len() != m {
                return Err(TensorError::ShapeMismatch(format!(
                    "affine: bias has {} elements, expected {m}",
                    vb.len()
                )));
            }
        }
        let mut out = vec![0.0; m];
        {
            let wd = self.value(w).data();
            let xd = self.value(x).data();
            for (i, o) in out.iter_mut().enumerate() {
                let row = &wd[i * n..(i + 1) * n];
                *o = row.iter().zip(xd).map(|(a, b)| a * b).sum();
            }
            if let Some(b) = b {
                for (o, bv) in out.iter_mut().zip(self.value(b).data()) {
                    *o += bv;
                }
            }
        }
        let value = Tensor::from_parts(vec![m], out);
        Ok(self.push(Op::Affine { w, x, b }, value))
    }

    /// Valid (unpadded) 2-d cross-correlation with per-channel bias.
    /// `input: [C_in, H, W]`, `kernels: [C_out, C_in, kh, kw]`,
    /// `bias: [C_out]`; output is `[C_out, H', W']` with
    /// `H' = (H - kh) / stride + 1` (floor).
    pub fn conv2d(
        &mut self,
        input: NodeId,
        kernels: NodeId,
        bias: NodeId,
        stride: usize,
    ) -> Result<NodeId, TensorError> {
        if stride == 0 {
            return Err(TensorError::ShapeMismatch(format!(
                "conv2d stride must be positive"
            )));
        }
        let vi = self.value(input);
        let vk = self.value(kernels);
        let vb = self.value(bias);
        if vi.shape().len() != 3 || vk.shape().len() != 4 {
            return Err(TensorError::ShapeMismatch(format!(
                "conv2d wants input rank 3 and kernels rank 4, got {:?} and {:?}",
                vi.shape(),
                vk.shape()
            )));
        }
        let (c_in, h, w) = (vi.shape()[0], vi.shape()[1], vi.shape()[2]);
        let (c_out, kc, kh, kw) = (vk.shape()[0], vk.shape()[1], vk.shape()[2], vk.shape()[3]);
        if kc != c_in {
            return Err(TensorError::ShapeMismatch(format!(
                "conv2d: kernels expect {kc} input channels, input has {c_in}"
            )));
        }
        if kh > h || kw > w {
            return Err(TensorError::ShapeMismatch(format!(
                "conv2d: kernel {kh}x{kw} larger than input {h}x{w}"
            )));
        }
        if vb.len() != c_out {
            return Err(TensorError::ShapeMismatch(format!(
                "conv2d: bias has {} channels, expected {c_out}",
                vb.len()
            )));
        }
        let oh = (h - kh) / stride + 1;
        let ow = (w - kw) / stride + 1;
        let mut out = vec![0.0; c_out * oh * ow];
        {
            let id = self.value(input).data();
            let kd = self.value(kernels).data();
            let bd = self.value(bias).data();
            for o in 0..c_out {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = bd[o];
                        for c in 0..c_in {
                            for py in 0..kh {
                                let iy = oy * stride + py;
                                let irow = (c * h + iy) * w + ox * stride;
                                let krow = ((o * c_in + c) * kh + py) * kw;
                                for px in 0..kw {
                                    acc += id[irow + px] * kd[krow + px];
                                }
                            }
                        }
                        out[(o * oh + oy) * ow + ox] = acc;
                    }
                }
            }
        }
        let value = Tensor::from_parts(vec![c_out, oh, ow], out);
        Ok(self.push(
            Op::Conv2d {
                input,
                kernels,
                bias,
                stride,
            },
            value,
        ))
    }

    /// Reverse-mode sweep from a scalar loss node. Returns the gradient as
    /// a flat vector aligned with `params`; parameters that do not reach
    /// the loss get exactly zero.
    pub fn backward(&self, loss: NodeId, params: &ParamVector) -> Result<Vec<f64>, TensorError> {
        if loss.0 >= self.nodes.len() {
            return Err(TensorError::InvalidValue(format!(
                "unknown node id {}",
                loss.0
            )));
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(TensorError::NonScalarLoss);
        }
        let mut out = vec![0.0; params.len_flat()];
        let mut grads: Vec<Option<Vec<f64>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        // Every operation's inputs precede it on the tape, so by the time
        // the sweep reaches a node its gradient is complete.
        for i in (0..=loss.0).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.nodes[i].op {
                Op::Leaf { param } => {
                    if let Some(p) = param {
                        let offset = params.offset(*p);
                        for (slot, gv) in out[offset..offset + g.len()].iter_mut().zip(&g) {
                            *slot += gv;
                        }
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, a.0, &g, |gv, _| gv, &[]);
                    accumulate(&mut grads, b.0, &g, |gv, _| gv, &[]);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.nodes[a.0].value.data(), self.nodes[b.0].value.data());
                    accumulate(&mut grads, a.0, &g, |gv, i| gv * vb[i], &[]);
                    accumulate(&mut grads, b.0, &g, |gv, i| gv * va[i], &[]);
                }
                Op::Relu(x) => {
                    let vx = self.nodes[x.0].value.data();
                    accumulate(
                        &mut grads,
                        x.0,
                        &g,
                        |gv, i| if vx[i] > 0.0 { gv } else { 0.0 },
                        &[],
                    );
                }
                Op::Tanh(x) => {
                    let y = self.nodes[i].value.data();
                    accumulate(&mut grads, x.0, &g, |gv, i| gv * (1.0 - y[i] * y[i]), &[]);
                }
                Op::Sigmoid(x) => {
                    let y = self.nodes[i].value.data();
                    accumulate(&mut grads, x.0, &g, |gv, i| gv * y[i] * (1.0 - y[i]), &[]);
                }
                Op::Log(x) => {
                    let vx = self.nodes[x.0].value.data();
                    accumulate(&mut grads, x.0, &g, |gv, i| gv / vx[i], &[]);
                }
                Op::Scale(x, c) => {
                    let c = *c;
                    accumulate(&mut grads, x.0, &g, |gv, _| gv * c, &[]);
                }
                Op::Sum(x) => {
                    let n = self.nodes[x.0].value.len();
                    let gx = ensure(&mut grads, x.0, n);
                    for slot in gx.iter_mut() {
                        *slot += g[0];
                    }
                }
                Op::Softmax(x) => {
                    let y = self.nodes[i].value.data();
                    let dot: f64 = g.iter().zip(y).map(|(gv, yv)| gv * yv).sum();
                    let gx = ensure(&mut grads, x.0, y.len());
                    for (slot, (gv, yv)) in gx.iter_mut().zip(g.iter().zip(y)) {
                        *slot += yv * (gv - dot);
                    }
                }
                Op::Slice { x, start } => {
                    let n = self.nodes[x.0].value.len();
                    let gx = ensure(&mut grads, x.0, n);
                    for (slot, gv) in gx[*start..*start + g.len()].iter_mut().zip(&g) {
                        *slot += gv;
                    }
                }
                Op::Affine { w, x, b } => {
                    let vw = self.nodes[w.0].value.data();
                    let vx = self.nodes[x.0].value.data();
                    let n = vx.len();
                    {
                        let gw = ensure(&mut grads, w.0, vw.len());
                        for (row, gv) in g.iter().enumerate() {
                            if *gv == 0.0 {
                                continue;
                            }
                            for (slot, xv) in gw[row * n..(row + 1) * n].iter_mut().zip(vx) {
                                *slot += gv * xv;
                            }
                        }
                    }
                    {
                        let gx = ensure(&mut grads, x.0, n);
                        for (row, gv) in g.iter().enumerate() {
                            if *gv == 0.0 {
                                continue;
                            }
                            for (slot, wv) in gx.iter_mut().zip(&vw[row * n..(row + 1) * n]) {
                                *slot += gv * wv;
                            }
                        }
                    }
                    if let Some(b) = b {
                        let gb = ensure(&mut grads, b.0, g.len());
                        for (slot, gv) in gb.iter_mut().zip(&g) {
                            *slot += gv;
                        }
                    }
                }
                Op::Conv2d {
                    input,
                    kernels,
                    bias,
                    stride,
                } => {
                    let vi = &self.nodes[input.0].value;
                    let vk = &self.nodes[kernels.0].value;
                    let (c_in, h, w) = (vi.shape()[0], vi.shape()[1], vi.shape()[2]);
                    let (c_out, _, kh, kw) =
                        (vk.shape()[0], vk.shape()[1], vk.shape()[2], vk.shape()[3]);
                    let oh = (h - kh) / stride + 1;
                    let ow = (w - kw) / stride + 1;
                    let id = vi.data();
                    let kd = vk.data();
                    let s = *stride;

                    let mut gi = vec![0.0; id.len()];
                    let mut gk = vec![0.0; kd.len()];
                    let mut gb = vec![0.0; c_out];
                    for o in 0..c_out {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let gv = g[(o * oh + oy) * ow + ox];
                                if gv == 0.0 {
                                    continue;
                                }
                                gb[o] += gv;
                                for c in 0..c_in {
                                    for py in 0..kh {
                                        let iy = oy * s + py;
                                        let ioff = (c * h + iy) * w + ox * s;
                                        let koff = ((o * c_in + c) * kh + py) * kw;
                                        for px in 0..kw {
                                            gi[ioff + px] += gv * kd[koff + px];
                                            gk[koff + px] += gv * id[ioff + px];
                                        }
                                    }
                                }
                            }
                        }
                    }
                    add_into(ensure(&mut grads, input.0, gi.len()), &gi);
                    add_into(ensure(&mut grads, kernels.0, gk.len()), &gk);
                    add_into(ensure(&mut grads, bias.0, gb.len()), &gb);
                }
            }
        }
        Ok(out)
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn ensure<'a>(grads: &'a mut [Option<Vec<f64>>], idx: usize, len: usize) -> &'a mut Vec<f64> {
    grads[idx].get_or_insert_with(|| vec![0.0; len])
}

fn accumulate<F: Fn(f64, usize) -> f64>(
    grads: &mut [Option<Vec<f64>>],
    idx: usize,
    g: &[f64],
    f: F,
    _: &[f64],
) {
    let gx = ensure(grads, idx, g.len());
    for (i, (slot, gv)) in gx.iter_mut().zip(g).enumerate() {
        *slot += f(*gv, i);
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Weight handles for one LSTM cell: input projection `w_x: [4H, n_in]`,
/// recurrent projection `w_h: [4H, H]` and gate bias `b: [4H]`, with gate
/// rows ordered input, forget, candidate, output.
#[derive(Clone, Copy, Debug)]
pub struct LstmWeights {
    pub w_x: NodeId,
    pub w_h: NodeId,
    pub b: NodeId,
}

/// One step of a standard LSTM cell, recorded as tape primitives:
/// `i,f,o = sigmoid(...)`, `g = tanh(...)`, `c = f*c_prev + i*g`,
/// `h = o * tanh(c)`.
pub fn lstm_cell(
    tape: &mut Tape,
    x: NodeId,
    h_prev: NodeId,
    c_prev: NodeId,
    weights: &LstmWeights,
    hidden: usize,
) -> Result<(NodeId, NodeId), TensorError> {
    let zx = tape.affine(weights.w_x, x, Some(weights.b))?;
    let zh = tape.affine(weights.w_h, h_prev, None)?;
    if tape.value(zx).len() != 4 * hidden || tape.value(zh).len() != 4 * hidden {
        return Err(TensorError::ShapeMismatch(format!(
            "lstm_cell: gate pre-activations must have 4*{hidden} elements"
        )));
    }
    if tape.value(c_prev).len() != hidden {
        return Err(TensorError::ShapeMismatch(format!(
            "lstm_cell: cell state must have {hidden} elements"
        )));
    }
    let z = tape.add(zx, zh)?;
    let zi = tape.slice(z, 0, hidden)?;
    let zf = tape.slice(z, hidden, hidden)?;
    let zg = tape.slice(z, 2 * hidden, hidden)?;
    let zo = tape.slice(z, 3 * hidden, hidden)?;
    let i = tape.sigmoid(zi);
    let f = tape.sigmoid(zf);
    let g = tape.tanh(zg);
    let o = tape.sigmoid(zo);
    let fc = tape.mul(f, c_prev)?;
    let ig = tape.mul(i, g)?;
    let c = tape.add(fc, ig)?;
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc)?;
    Ok((h, c))
}
