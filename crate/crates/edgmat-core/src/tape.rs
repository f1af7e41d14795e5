//! Reverse-mode automatic differentiation over tensors.
//!
//! A [`Tape`] records every operation in execution order; [`Tape::backward`]
//! walks the record in strict reverse order and accumulates gradients into
//! per-node buffers. The operation set is exactly what the attention model
//! needs — dense linear maps plus the gather/segment primitives of message
//! passing — with fused, numerically-stabilized softmax and cross-entropy.
//!
//! Backward rules:
//!   matmul      C = A·B            dA = dC·Bᵀ,  dB = Aᵀ·dC
//!   matvec      y = A·v            dA = dy ⊗ v, dv = Aᵀ·dy
//!   gather      out[r] = src[i_r]  dsrc[i_r] += dout[r]
//!   segment_sum out[s] = Σ src[e]  dsrc[e] = dout[seg_e]
//!   scale_rows  out[r] = s_r·x_r   dx_r = s_r·dout_r, ds_r = ⟨dout_r, x_r⟩
//!   seg_softmax y_e = softmax      ds_e = y_e·(g_e − Σ_seg g·y)
//!
//! Shapes are validated with assertions: the model layer checks dimensions
//! before anything reaches the tape.

use alloc::rc::Rc;
use alloc::{vec, vec::Vec};

use crate::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId(usize);

enum Op {
    Leaf,
    MatMul(VarId, VarId),
    MatVec(VarId, VarId),
    Add(VarId, VarId),
    Mul(VarId, VarId),
    AddRowBroadcast(VarId, VarId),
    ConcatCols(Vec<VarId>),
    ConcatRows(Vec<VarId>),
    GatherRows(VarId, Rc<Vec<usize>>),
    SegmentSum(VarId, Rc<Vec<usize>>),
    ScaleRows(VarId, VarId),
    LeakyRelu(VarId, f64),
    Relu(VarId),
    MulConst(VarId, Tensor),
    SegmentSoftmax(VarId, Rc<Vec<usize>>),
    WeightedCrossEntropy {
        logits: VarId,
        labels: Rc<Vec<usize>>,
        // per-row loss weight w_{y_i} and the softmax probabilities,
        // saved for backward
        row_weights: Vec<f64>,
        probs: Tensor,
    },
    Sum(VarId),
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Execution-ordered record of a differentiable computation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> VarId {
        self.nodes.push(Node { value, op });
        VarId(self.nodes.len() - 1)
    }

    /// Record an input (parameter or constant feature) node.
    pub fn leaf(&mut self, value: Tensor) -> VarId {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, id: VarId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient of the last `backward` target w.r.t. node `id`; zeros if the
    /// node did not influence the target.
    pub fn grad(&self, id: VarId) -> Tensor {
        match self.grads.get(id.0) {
            Some(Some(g)) => g.clone(),
            _ => Tensor::zeros(self.nodes[id.0].value.shape()),
        }
    }

    pub fn matmul(&mut self, a: VarId, b: VarId) -> VarId {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(va.shape().len(), 2, "matmul lhs must be 2-D");
        assert_eq!(vb.shape().len(), 2, "matmul rhs must be 2-D");
        let (n, k) = (va.shape()[0], va.shape()[1]);
        let (k2, m) = (vb.shape()[0], vb.shape()[1]);
        assert_eq!(k, k2, "matmul inner dims {k} vs {k2}");
        let mut out = Tensor::zeros(&[n, m]);
        matmul_into(va, vb, out.data_mut(), n, k, m);
        self.push(out, Op::MatMul(a, b))
    }

    pub fn matvec(&mut self, a: VarId, v: VarId) -> VarId {
        let (va, vv) = (&self.nodes[a.0].value, &self.nodes[v.0].value);
        assert_eq!(va.shape().len(), 2, "matvec lhs must be 2-D");
        assert_eq!(vv.shape().len(), 1, "matvec rhs must be 1-D");
        let (n, k) = (va.shape()[0], va.shape()[1]);
        assert_eq!(k, vv.shape()[0], "matvec inner dims");
        let mut out = Tensor::zeros(&[n]);
        for i in 0..n {
            let row = va.row(i);
            let mut acc = 0.0;
            for j in 0..k {
                acc += row[j] * vv.data()[j];
            }
            out.data_mut()[i] = acc;
        }
        self.push(out, Op::MatVec(a, v))
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> VarId {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(va.shape(), vb.shape(), "add shape mismatch");
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x + y)
            .collect();
        let out = Tensor::new(va.shape(), data);
        self.push(out, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: VarId, b: VarId) -> VarId {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(va.shape(), vb.shape(), "mul shape mismatch");
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x * y)
            .collect();
        let out = Tensor::new(va.shape(), data);
        self.push(out, Op::Mul(a, b))
    }

    /// `[n×m] + [m]`: add a bias row to every row.
    pub fn add_row_broadcast(&mut self, a: VarId, bias: VarId) -> VarId {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[bias.0].value);
        assert_eq!(va.shape().len(), 2);
        assert_eq!(vb.shape().len(), 1);
        let (n, m) = (va.shape()[0], va.shape()[1]);
        assert_eq!(m, vb.shape()[0], "bias length");
        let mut out = va.clone();
        for i in 0..n {
            for j in 0..m {
                out.data_mut()[i * m + j] += vb.data()[j];
            }
        }
        self.push(out, Op::AddRowBroadcast(a, bias))
    }

    /// Concatenate 2-D tensors along `axis` (0 = stack rows, 1 = widen rows).
    pub fn concat(&mut self, parts: &[VarId], axis: usize) -> VarId {
        assert!(!parts.is_empty(), "concat of nothing");
        assert!(axis < 2, "concat axis must be 0 or 1");
        if parts.len() == 1 {
            // singleton concat is the identity
            return parts[0];
        }
        match axis {
            1 => {
                let n = self.nodes[parts[0].0].value.shape()[0];
                let mut width = 0;
                for p in parts {
                    let v = &self.nodes[p.0].value;
                    assert_eq!(v.shape().len(), 2);
                    assert_eq!(v.shape()[0], n, "concat row count mismatch");
                    width += v.shape()[1];
                }
                let mut out = Tensor::zeros(&[n, width]);
                let mut col = 0;
                for p in parts {
                    let v = &self.nodes[p.0].value;
                    let w = v.shape()[1];
                    for i in 0..n {
                        out.data_mut()[i * width + col..i * width + col + w]
                            .copy_from_slice(v.row(i));
                    }
                    col += w;
                }
                self.push(out, Op::ConcatCols(parts.to_vec()))
            }
            _ => {
                let m = self.nodes[parts[0].0].value.shape()[1];
                let mut rows = 0;
                for p in parts {
                    let v = &self.nodes[p.0].value;
                    assert_eq!(v.shape().len(), 2);
                    assert_eq!(v.shape()[1], m, "concat col count mismatch");
                    rows += v.shape()[0];
                }
                let mut data = Vec::with_capacity(rows * m);
                for p in parts {
                    data.extend_from_slice(self.nodes[p.0].value.data());
                }
                self.push(Tensor::new(&[rows, m], data), Op::ConcatRows(parts.to_vec()))
            }
        }
    }

    /// Select rows of a 2-D tensor: `out[r] = src[indices[r]]`.
    pub fn gather_rows(&mut self, src: VarId, indices: Rc<Vec<usize>>) -> VarId {
        let v = &self.nodes[src.0].value;
        assert_eq!(v.shape().len(), 2);
        let m = v.shape()[1];
        let mut out = Tensor::zeros(&[indices.len(), m]);
        for (r, &i) in indices.iter().enumerate() {
            out.data_mut()[r * m..(r + 1) * m].copy_from_slice(v.row(i));
        }
        self.push(out, Op::GatherRows(src, indices))
    }

    /// Sum rows into segments: `out[s] = Σ_{r : segments[r] = s} src[r]`.
    /// Empty segments yield zero rows.
    pub fn segment_sum(
        &mut self,
        src: VarId,
        segments: Rc<Vec<usize>>,
        num_segments: usize,
    ) -> VarId {
        let v = &self.nodes[src.0].value;
        assert_eq!(v.shape().len(), 2);
        assert_eq!(v.shape()[0], segments.len(), "one segment id per row");
        let m = v.shape()[1];
        let mut out = Tensor::zeros(&[num_segments, m]);
        for (r, &s) in segments.iter().enumerate() {
            debug_assert!(s < num_segments);
            for j in 0..m {
                out.data_mut()[s * m + j] += v.data()[r * m + j];
            }
        }
        self.push(out, Op::SegmentSum(src, segments))
    }

    /// Scale row `r` of `src` by `scale[r]`.
    pub fn scale_rows(&mut self, src: VarId, scale: VarId) -> VarId {
        let (v, s) = (&self.nodes[src.0].value, &self.nodes[scale.0].value);
        assert_eq!(v.shape().len(), 2);
        assert_eq!(s.shape().len(), 1);
        assert_eq!(v.shape()[0], s.shape()[0], "one scale per row");
        let m = v.shape()[1];
        let mut out = v.clone();
        for r in 0..v.shape()[0] {
            let f = s.data()[r];
            for j in 0..m {
                out.data_mut()[r * m + j] *= f;
            }
        }
        self.push(out, Op::ScaleRows(src, scale))
    }

    /// LeakyReLU with the subgradient at 0 defined as `slope`.
    pub fn leaky_relu(&mut self, src: VarId, slope: f64) -> VarId {
        assert!(slope >= 0.0, "negative slope must be ≥ 0");
        let data = self.nodes[src.0]
            .value
            .data()
            .iter()
            .map(|&x| if x > 0.0 { x } else { slope * x })
            .collect();
        let out = Tensor::new(self.nodes[src.0].value.shape(), data);
        self.push(out, Op::LeakyRelu(src, slope))
    }

    pub fn relu(&mut self, src: VarId) -> VarId {
        let data = self.nodes[src.0]
            .value
            .data()
            .iter()
            .map(|&x| if x > 0.0 { x } else { 0.0 })
            .collect();
        let out = Tensor::new(self.nodes[src.0].value.shape(), data);
        self.push(out, Op::Relu(src))
    }

    /// Elementwise product with a constant (non-differentiated) tensor.
    pub fn mul_const(&mut self, src: VarId, mask: Tensor) -> VarId {
        let v = &self.nodes[src.0].value;
        assert_eq!(v.shape(), mask.shape(), "mask shape mismatch");
        let data = v.data().iter().zip(mask.data()).map(|(x, m)| x * m).collect();
        let out = Tensor::new(v.shape(), data);
        self.push(out, Op::MulConst(src, mask))
    }

    /// Inverted dropout: zero each element with probability `p` and scale
    /// survivors by `1/(1-p)`. Identity when not training or `p == 0`.
    pub fn dropout(
        &mut self,
        src: VarId,
        p: f64,
        training: bool,
        rng: &mut crate::rng::StreamRng,
    ) -> VarId {
        assert!((0.0..1.0).contains(&p), "dropout probability must be in [0,1)");
        if !training || p == 0.0 {
            return src;
        }
        let keep = 1.0 / (1.0 - p);
        let shape = self.nodes[src.0].value.shape().to_vec();
        let n = self.nodes[src.0].value.len();
        let mask = Tensor::new(
            &shape,
            (0..n).map(|_| if rng.bernoulli(p) { 0.0 } else { keep }).collect(),
        );
        self.mul_const(src, mask)
    }

    /// Softmax within each segment, stabilized by per-segment max
    /// subtraction. `src` is 1-D; rows sharing a segment id normalize
    /// together and each non-empty segment sums to 1.
    pub fn segment_softmax(&mut self, src: VarId, segments: Rc<Vec<usize>>) -> VarId {
        let v = &self.nodes[src.0].value;
        assert_eq!(v.shape().len(), 1);
        assert_eq!(v.len(), segments.len());
        let num_segments = segments.iter().copied().max().map_or(0, |m| m + 1);
        let mut seg_max = vec![f64::NEG_INFINITY; num_segments];
        for (e, &s) in segments.iter().enumerate() {
            if v.data()[e] > seg_max[s] {
                seg_max[s] = v.data()[e];
            }
        }
        let mut out = Tensor::zeros(&[v.len()]);
        let mut seg_sum = vec![0.0f64; num_segments];
        for (e, &s) in segments.iter().enumerate() {
            let x = libm::exp(v.data()[e] - seg_max[s]);
            out.data_mut()[e] = x;
            seg_sum[s] += x;
        }
        for (e, &s) in segments.iter().enumerate() {
            out.data_mut()[e] /= seg_sum[s];
        }
        self.push(out, Op::SegmentSoftmax(src, segments))
    }

    /// Class-weighted cross entropy, normalized by the total weight of the
    /// batch: `Σ_i w_{y_i}·(−log softmax(logits_i)[y_i]) / Σ_i w_{y_i}`.
    pub fn weighted_cross_entropy(
        &mut self,
        logits: VarId,
        labels: Rc<Vec<usize>>,
        class_weights: &[f64],
    ) -> VarId {
        let v = &self.nodes[logits.0].value;
        assert_eq!(v.shape().len(), 2);
        let (n, c) = (v.shape()[0], v.shape()[1]);
        assert_eq!(n, labels.len(), "one label per logits row");
        assert_eq!(c, class_weights.len(), "one weight per class");
        assert!(class_weights.iter().all(|&w| w >= 0.0), "negative class weight");
        assert!(
            class_weights.iter().any(|&w| w > 0.0),
            "all class weights zero"
        );
        let mut probs = Tensor::zeros(&[n, c]);
        let mut row_weights = Vec::with_capacity(n);
        let mut loss = 0.0;
        let mut weight_sum = 0.0;
        for i in 0..n {
            let y = labels[i];
            assert!(y < c, "label {y} out of range for {c} classes");
            let row = v.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for j in 0..c {
                let e = libm::exp(row[j] - max);
                probs.data_mut()[i * c + j] = e;
                sum += e;
            }
            for j in 0..c {
                probs.data_mut()[i * c + j] /= sum;
            }
            let log_py = row[y] - max - libm::log(sum);
            let w = class_weights[y];
            loss -= w * log_py;
            weight_sum += w;
            row_weights.push(w);
        }
        let value = if weight_sum > 0.0 { loss / weight_sum } else { 0.0 };
        // stash weight_sum in the last slot so backward sees it
        row_weights.push(weight_sum);
        self.push(
            Tensor::scalar(value),
            Op::WeightedCrossEntropy {
                logits,
                labels,
                row_weights,
                probs,
            },
        )
    }

    /// Sum of all elements, as a scalar node.
    pub fn sum(&mut self, src: VarId) -> VarId {
        let total: f64 = self.nodes[src.0].value.data().iter().sum();
        self.push(Tensor::scalar(total), Op::Sum(src))
    }

    /// Backpropagate from scalar node `target`, replacing any previous
    /// gradients on this tape.
    pub fn backward(&mut self, target: VarId) {
        assert_eq!(
            self.nodes[target.0].value.len(),
            1,
            "backward target must be scalar"
        );
        self.grads = vec![None; self.nodes.len()];
        self.grads[target.0] = Some(Tensor::scalar(1.0));

        for i in (0..self.nodes.len()).rev() {
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            self.propagate(i, &g);
            self.grads[i] = Some(g);
        }
    }

    fn accum(&mut self, id: VarId, delta: Tensor) {
        match &mut self.grads[id.0] {
            Some(g) => {
                for (a, b) in g.data_mut().iter_mut().zip(delta.data()) {
                    *a += b;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }

    fn propagate(&mut self, i: usize, g: &Tensor) {
        // Op is moved out structurally via references; node values are read
        // through raw indexing to keep the borrow checker satisfied.
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (a, b) = (*a, *b);
                let va = self.nodes[a.0].value.clone();
                let vb = self.nodes[b.0].value.clone();
                let (n, k) = (va.shape()[0], va.shape()[1]);
                let m = vb.shape()[1];
                // dA = g · Bᵀ
                let mut da = Tensor::zeros(&[n, k]);
                for r in 0..n {
                    for c in 0..k {
                        let mut acc = 0.0;
                        for j in 0..m {
                            acc += g.data()[r * m + j] * vb.data()[c * m + j];
                        }
                        da.data_mut()[r * k + c] = acc;
                    }
                }
                // dB = Aᵀ · g
                let mut db = Tensor::zeros(&[k, m]);
                for r in 0..k {
                    for c in 0..m {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += va.data()[j * k + r] * g.data()[j * m + c];
                        }
                        db.data_mut()[r * m + c] = acc;
                    }
                }
                self.accum(a, da);
                self.accum(b, db);
            }
            Op::MatVec(a, v) => {
                let (a, v) = (*a, *v);
                let va = self.nodes[a.0].value.clone();
                let vv = self.nodes[v.0].value.clone();
                let (n, k) = (va.shape()[0], va.shape()[1]);
                let mut da = Tensor::zeros(&[n, k]);
                let mut dv = Tensor::zeros(&[k]);
                for r in 0..n {
                    let gr = g.data()[r];
                    for c in 0..k {
                        da.data_mut()[r * k + c] = gr * vv.data()[c];
                        dv.data_mut()[c] += gr * va.data()[r * k + c];
                    }
                }
                self.accum(a, da);
                self.accum(v, dv);
            }
            Op::Add(a, b) => {
                let (a, b) = (*a, *b);
                self.accum(a, g.clone());
                self.accum(b, g.clone());
            }
            Op::Mul(a, b) => {
                let (a, b) = (*a, *b);
                let va = self.nodes[a.0].value.clone();
                let vb = self.nodes[b.0].value.clone();
                let da = Tensor::new(
                    g.shape(),
                    g.data().iter().zip(vb.data()).map(|(x, y)| x * y).collect(),
                );
                let db = Tensor::new(
                    g.shape(),
                    g.data().iter().zip(va.data()).map(|(x, y)| x * y).collect(),
                );
                self.accum(a, da);
                self.accum(b, db);
            }
            Op::AddRowBroadcast(a, bias) => {
                let (a, bias) = (*a, *bias);
                let (n, m) = (g.shape()[0], g.shape()[1]);
                let mut db = Tensor::zeros(&[m]);
                for r in 0..n {
                    for c in 0..m {
                        db.data_mut()[c] += g.data()[r * m + c];
                    }
                }
                self.accum(a, g.clone());
                self.accum(bias, db);
            }
            Op::ConcatCols(parts) => {
                let parts = parts.clone();
                let n = g.shape()[0];
                let width = g.shape()[1];
                let mut col = 0;
                for p in parts {
                    let w = self.nodes[p.0].value.shape()[1];
                    let mut dp = Tensor::zeros(&[n, w]);
                    for r in 0..n {
                        dp.data_mut()[r * w..(r + 1) * w]
                            .copy_from_slice(&g.data()[r * width + col..r * width + col + w]);
                    }
                    self.accum(p, dp);
                    col += w;
                }
            }
            Op::ConcatRows(parts) => {
                let parts = parts.clone();
                let m = g.shape()[1];
                let mut row = 0;
                for p in parts {
                    let r = self.nodes[p.0].value.shape()[0];
                    let dp = Tensor::new(
                        &[r, m],
                        g.data()[row * m..(row + r) * m].to_vec(),
                    );
                    self.accum(p, dp);
                    row += r;
                }
            }
            Op::GatherRows(src, indices) => {
                let (src, indices) = (*src, indices.clone());
                let shape = self.nodes[src.0].value.shape().to_vec();
                let m = shape[1];
                let mut ds = Tensor::zeros(&shape);
                for (r, &i) in indices.iter().enumerate() {
                    for j in 0..m {
                        ds.data_mut()[i * m + j] += g.data()[r * m + j];
                    }
                }
                self.accum(src, ds);
            }
            Op::SegmentSum(src, segments) => {
                let (src, segments) = (*src, segments.clone());
                let shape = self.nodes[src.0].value.shape().to_vec();
                let m = shape[1];
                let mut ds = Tensor::zeros(&shape);
                for (r, &s) in segments.iter().enumerate() {
                    ds.data_mut()[r * m..(r + 1) * m]
                        .copy_from_slice(&g.data()[s * m..(s + 1) * m]);
                }
                self.accum(src, ds);
            }
            Op::ScaleRows(src, scale) => {
                let (src, scale) = (*src, *scale);
                let vsrc = self.nodes[src.0].value.clone();
                let vscale = self.nodes[scale.0].value.clone();
                let (n, m) = (vsrc.shape()[0], vsrc.shape()[1]);
                let mut ds = Tensor::zeros(&[n, m]);
                let mut dscale = Tensor::zeros(&[n]);
                for r in 0..n {
                    let f = vscale.data()[r];
                    let mut dot = 0.0;
                    for j in 0..m {
                        ds.data_mut()[r * m + j] = f * g.data()[r * m + j];
                        dot += g.data()[r * m + j] * vsrc.data()[r * m + j];
                    }
                    dscale.data_mut()[r] = dot;
                }
                self.accum(src, ds);
                self.accum(scale, dscale);
            }
            Op::LeakyRelu(src, slope) => {
                let (src, slope) = (*src, *slope);
                let vsrc = self.nodes[src.0].value.clone();
                let ds = Tensor::new(
                    g.shape(),
                    g.data()
                        .iter()
                        .zip(vsrc.data())
                        .map(|(gd, &x)| if x > 0.0 { *gd } else { slope * gd })
                        .collect(),
                );
                self.accum(src, ds);
            }
            Op::Relu(src) => {
                let src = *src;
                let vsrc = self.nodes[src.0].value.clone();
                let ds = Tensor::new(
                    g.shape(),
                    g.data()
                        .iter()
                        .zip(vsrc.data())
                        .map(|(gd, &x)| if x > 0.0 { *gd } else { 0.0 })
                        .collect(),
                );
                self.accum(src, ds);
            }
            Op::MulConst(src, mask) => {
                let src = *src;
                let mask = mask.clone();
                let ds = Tensor::new(
                    g.shape(),
                    g.data().iter().zip(mask.data()).map(|(x, m)| x * m).collect(),
                );
                self.accum(src, ds);
            }
            Op::SegmentSoftmax(src, segments) => {
                let (src, segments) = (*src, segments.clone());
                let y = self.nodes[i].value.clone();
                let num_segments = segments.iter().copied().max().map_or(0, |m| m + 1);
                let mut seg_dot = vec![0.0f64; num_segments];
                for (e, &s) in segments.iter().enumerate() {
                    seg_dot[s] += g.data()[e] * y.data()[e];
                }
                let ds = Tensor::new(
                    y.shape(),
                    (0..y.len())
                        .map(|e| y.data()[e] * (g.data()[e] - seg_dot[segments[e]]))
                        .collect(),
                );
                self.accum(src, ds);
            }
            Op::WeightedCrossEntropy {
                logits,
                labels,
                row_weights,
                probs,
            } => {
                let logits = *logits;
                let labels = labels.clone();
                let probs = probs.clone();
                let weight_sum = *row_weights.last().expect("weight sum saved");
                let row_weights = row_weights[..row_weights.len() - 1].to_vec();
                let upstream = g.item();
                let (n, c) = (probs.shape()[0], probs.shape()[1]);
                let mut dl = Tensor::zeros(&[n, c]);
                if weight_sum > 0.0 {
                    let scale = upstream / weight_sum;
                    for r in 0..n {
                        let w = row_weights[r];
                        for j in 0..c {
                            let indicator = if j == labels[r] { 1.0 } else { 0.0 };
                            dl.data_mut()[r * c + j] =
                                scale * w * (probs.at(r, j) - indicator);
                        }
                    }
                }
                self.accum(logits, dl);
            }
            Op::Sum(src) => {
                let src = *src;
                let shape = self.nodes[src.0].value.shape().to_vec();
                self.accum(src, Tensor::filled(&shape, g.item()));
            }
        }
    }

    /// Smallest |x| over all inputs feeding LeakyReLU/ReLU nodes; gradient
    /// checks reject configurations that sit on an activation kink.
    pub fn min_kink_distance(&self) -> f64 {
        let mut min = f64::INFINITY;
        for node in &self.nodes {
            let src = match node.op {
                Op::LeakyRelu(src, _) | Op::Relu(src) => src,
                _ => continue,
            };
            for &x in self.nodes[src.0].value.data() {
                let d = x.abs();
                if d < min {
                    min = d;
                }
            }
        }
        min
    }
}

fn matmul_into(a: &Tensor, b: &Tensor, out: &mut [f64], n: usize, k: usize, m: usize) {
    for r in 0..n {
        let arow = &a.data()[r * k..(r + 1) * k];
        let orow = &mut out[r * m..(r + 1) * m];
        for (x, &av) in arow.iter().enumerate() {
            let brow = &b.data()[x * m..(x + 1) * m];
            for j in 0..m {
                orow[j] += av * brow[j];
            }
        }
    }
}

/// Max relative error between reverse-mode and central finite-difference
/// gradients of a scalar computation, over every element of every input:
/// `|g_ad − g_fd| / max(1, |g_ad|, |g_fd|)` with step `h = 1e-6`.
///
/// `f` must be a pure function of its inputs (build the same computation on
/// the fresh tape it is given every call).
pub fn gradcheck<F>(inputs: &[Tensor], f: F) -> f64
where
    F: Fn(&mut Tape, &[VarId]) -> VarId,
{
    let per_input = gradcheck_per_input(inputs, f);
    per_input.into_iter().fold(0.0, f64::max)
}

/// Per-input max relative error; same contract as [`gradcheck`].
pub fn gradcheck_per_input<F>(inputs: &[Tensor], f: F) -> Vec<f64>
where
    F: Fn(&mut Tape, &[VarId]) -> VarId,
{
    const H: f64 = 1e-6;

    let eval = |tensors: &[Tensor]| -> f64 {
        let mut tape = Tape::new();
        let vars: Vec<VarId> = tensors.iter().map(|t| tape.leaf(t.clone())).collect();
        let loss = f(&mut tape, &vars);
        tape.value(loss).item()
    };

    let mut tape = Tape::new();
    let vars: Vec<VarId> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let loss = f(&mut tape, &vars);
    tape.backward(loss);
    let ad_grads: Vec<Tensor> = vars.iter().map(|&v| tape.grad(v)).collect();

    let mut work: Vec<Tensor> = inputs.to_vec();
    let mut errors = Vec::with_capacity(inputs.len());
    for (idx, grad) in ad_grads.iter().enumerate() {
        let mut worst = 0.0f64;
        for e in 0..inputs[idx].len() {
            let orig = inputs[idx].data()[e];
            work[idx].data_mut()[e] = orig + H;
            let up = eval(&work);
            work[idx].data_mut()[e] = orig - H;
            let down = eval(&work);
            work[idx].data_mut()[e] = orig;
            let fd = (up - down) / (2.0 * H);
            let ad = grad.data()[e];
            let denom = 1.0f64.max(ad.abs()).max(fd.abs());
            worst = worst.max((ad - fd).abs() / denom);
        }
        errors.push(worst);
    }
    errors
}
