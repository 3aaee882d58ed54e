//! Reverse-mode automatic differentiation on a flat tape of 2-D tensors.
//!
//! A [`Graph`] records every operation as it is built; values are computed
//! eagerly and kept alive on the tape so the backward pass can reuse them.
//! [`Graph::backward`] walks the tape in reverse and accumulates
//! vector-Jacobian products into each node that can reach a trainable leaf.
//!
//! The op set is exactly what a pre-norm transformer with a projection head
//! needs. Attention, layer norm and the cross-entropy loss are fused ops:
//! one tape node each, with hand-written backward rules. Every rule is
//! covered by a finite-difference check in the tests.
//!
//! Shape mismatches when building the graph are programmer errors and
//! panic, like slice indexing.

mod numcheck;

pub use numcheck::{gradcheck, gradcheck_f32, GradCheckReport};

use crate::numlin::{matmul_nn, matmul_nt, matmul_tn, transpose, Real, Tensor};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("backward requires a scalar output, got shape {0:?}")]
    NonScalarOutput(Vec<usize>),
    #[error(
        "gradient check failed at input {input}, element {element}: \
         analytic {analytic:.6e} vs numeric {numeric:.6e} (rel err {rel_err:.3e}, tol {tol:.3e})"
    )]
    GradCheckFailed {
        input: usize,
        element: usize,
        analytic: f64,
        numeric: f64,
        rel_err: f64,
        tol: f64,
    },
}

/// Handle to a node on the tape. Only valid for the graph that created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId(usize);

enum Op<T: Real> {
    Leaf,
    MatMul { a: VarId, b: VarId },
    Add { a: VarId, b: VarId },
    AddRow { a: VarId, row: VarId },
    MulScalar { a: VarId, c: T },
    Gelu { a: VarId },
    SoftmaxRows { a: VarId },
    LayerNorm { a: VarId, gain: VarId, bias: VarId, stats: Vec<(T, T)> },
    Transpose { a: VarId },
    ConcatRows { parts: Vec<VarId> },
    SliceRows { a: VarId, start: usize },
    Attention { q: VarId, k: VarId, v: VarId, n_heads: usize, probs: Tensor<T> },
    L2NormRows { a: VarId, eps: T },
    CeLossMean { logits: VarId, target: Tensor<T>, inv_temp: T, probs: Tensor<T> },
}

struct Node<T: Real> {
    value: Tensor<T>,
    grad: Option<Tensor<T>>,
    op: Op<T>,
    needs_grad: bool,
}

/// Reverse-mode tape. Build ops through the methods below, then call
/// [`Graph::backward`] once on a scalar output.
pub struct Graph<T: Real> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    /// Trainable input: gradients are accumulated for it.
    pub fn leaf(&mut self, value: Tensor<T>) -> VarId {
        self.push(value, Op::Leaf, true)
    }

    /// Non-trainable input: no gradient is ever computed for it.
    pub fn constant(&mut self, value: Tensor<T>) -> VarId {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, id: VarId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: VarId) -> Option<&Tensor<T>> {
        self.nodes[id.0].grad.as_ref()
    }

    /// Moves the accumulated gradient out of the tape (for the optimizer).
    pub fn take_grad(&mut self, id: VarId) -> Option<Tensor<T>> {
        self.nodes[id.0].grad.take()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> VarId {
        self.nodes.push(Node {
            value,
            grad: None,
            op,
            needs_grad,
        });
        VarId(self.nodes.len() - 1)
    }

    fn any_needs(&self, ids: &[VarId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].needs_grad)
    }

    /// `A · B`.
    pub fn matmul(&mut self, a: VarId, b: VarId) -> VarId {
        let value = matmul_nn(self.value(a), self.value(b));
        let needs = self.any_needs(&[a, b]);
        self.push(value, Op::MatMul { a, b }, needs)
    }

    /// Elementwise sum of two tensors of identical shape.
    pub fn add(&mut self, a: VarId, b: VarId) -> VarId {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.shape(), vb.shape(), "add: shape mismatch");
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(&x, &y)| x + y)
            .collect();
        let value = Tensor::from_vec_unchecked(va.shape().to_vec(), data);
        let needs = self.any_needs(&[a, b]);
        self.push(value, Op::Add { a, b }, needs)
    }

    /// Adds a `[1, D]` row to every row of a `[N, D]` tensor.
    pub fn add_row(&mut self, a: VarId, row: VarId) -> VarId {
        let (va, vr) = (self.value(a), self.value(row));
        assert_eq!(vr.rows(), 1, "add_row: second operand must be [1, D]");
        assert_eq!(va.cols(), vr.cols(), "add_row: column mismatch");
        let r = vr.row(0);
        let mut data = Vec::with_capacity(va.numel());
        for i in 0..va.rows() {
            for (j, &x) in va.row(i).iter().enumerate() {
                data.push(x + r[j]);
            }
        }
        let value = Tensor::from_vec_unchecked(va.shape().to_vec(), data);
        let needs = self.any_needs(&[a, row]);
        self.push(value, Op::AddRow { a, row }, needs)
    }

    /// Multiplication by a compile-time-constant scalar.
    pub fn mul_scalar(&mut self, a: VarId, c: f64) -> VarId {
        let c = T::from_f64(c);
        let data = self.value(a).data().iter().map(|&x| x * c).collect();
        let value = Tensor::from_vec_unchecked(self.value(a).shape().to_vec(), data);
        let needs = self.any_needs(&[a]);
        self.push(value, Op::MulScalar { a, c }, needs)
    }

    /// GELU with the tanh approximation, applied elementwise.
    pub fn gelu(&mut self, a: VarId) -> VarId {
        let data = self
            .value(a)
            .data()
            .iter()
            .map(|&x| gelu_scalar(x))
            .collect();
        let value = Tensor::from_vec_unchecked(self.value(a).shape().to_vec(), data);
        let needs = self.any_needs(&[a]);
        self.push(value, Op::Gelu { a }, needs)
    }

    /// Row-wise softmax with max subtraction for stability.
    pub fn softmax_rows(&mut self, a: VarId) -> VarId {
        let value = softmax_rows_forward(self.value(a));
        let needs = self.any_needs(&[a]);
        self.push(value, Op::SoftmaxRows { a }, needs)
    }

    /// Fused layer norm over the column axis:
    /// `gain ⊙ (x − μ_row) / sqrt(σ²_row + eps) + bias`.
    pub fn layernorm(&mut self, a: VarId, gain: VarId, bias: VarId, eps: f64) -> VarId {
        let (va, vg, vb) = (self.value(a), self.value(gain), self.value(bias));
        let d = va.cols();
        assert_eq!(vg.shape(), &[1, d], "layernorm: gain must be [1, D]");
        assert_eq!(vb.shape(), &[1, d], "layernorm: bias must be [1, D]");
        let eps = T::from_f64(eps);
        let inv_d = T::from_f64(1.0 / d as f64);
        let mut stats = Vec::with_capacity(va.rows());
        let mut data = Vec::with_capacity(va.numel());
        let (g, b) = (vg.row(0), vb.row(0));
        for i in 0..va.rows() {
            let xr = va.row(i);
            let mut mu = T::zero();
            for &x in xr {
                mu = mu + x;
            }
            mu = mu * inv_d;
            let mut var = T::zero();
            for &x in xr {
                let dxi = x - mu;
                var = var + dxi * dxi;
            }
            var = var * inv_d;
            let inv_std = (var + eps).sqrt().recip();
            stats.push((mu, inv_std));
            for (j, &x) in xr.iter().enumerate() {
                data.push(g[j] * ((x - mu) * inv_std) + b[j]);
            }
        }
        let value = Tensor::from_vec_unchecked(va.shape().to_vec(), data);
        let needs = self.any_needs(&[a, gain, bias]);
        self.push(value, Op::LayerNorm { a, gain, bias, stats }, needs)
    }

    pub fn transpose(&mut self, a: VarId) -> VarId {
        let value = transpose(self.value(a));
        let needs = self.any_needs(&[a]);
        self.push(value, Op::Transpose { a }, needs)
    }

    /// Stacks tensors with equal column counts along the row axis.
    pub fn concat_rows(&mut self, parts: &[VarId]) -> VarId {
        assert!(!parts.is_empty(), "concat_rows: no parts");
        let tensors: Vec<&Tensor<T>> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Tensor::vstack(&tensors).expect("concat_rows: column mismatch");
        let needs = self.any_needs(parts);
        self.push(value, Op::ConcatRows { parts: parts.to_vec() }, needs)
    }

    /// Rows `[start, start + len)` of a 2-D tensor.
    pub fn slice_rows(&mut self, a: VarId, start: usize, len: usize) -> VarId {
        let va = self.value(a);
        assert!(
            start + len <= va.rows() && len > 0,
            "slice_rows: range {start}..{} outside {} rows",
            start + len,
            va.rows()
        );
        let cols = va.cols();
        let data = va.data()[start * cols..(start + len) * cols].to_vec();
        let value = Tensor::from_vec_unchecked(vec![len, cols], data);
        let needs = self.any_needs(&[a]);
        self.push(value, Op::SliceRows { a, start }, needs)
    }

    /// Fused multi-head self-attention over already-projected `[N, D]`
    /// queries, keys and values. Scores are scaled by `1/sqrt(D / n_heads)`;
    /// the per-head attention probabilities are cached for the backward
    /// pass and for inspection via [`Graph::attention_probs`].
    pub fn attention(&mut self, q: VarId, k: VarId, v: VarId, n_heads: usize) -> VarId {
        let (vq, vk, vv) = (self.value(q), self.value(k), self.value(v));
        let (n, d) = (vq.rows(), vq.cols());
        assert_eq!(vk.shape(), &[n, d], "attention: K shape mismatch");
        assert_eq!(vv.shape(), &[n, d], "attention: V shape mismatch");
        assert!(
            n_heads > 0 && d % n_heads == 0,
            "attention: {d} columns not divisible into {n_heads} heads"
        );
        let dh = d / n_heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut out = Tensor::zeros(vec![n, d]);
        let mut probs_rows: Vec<Tensor<T>> = Vec::with_capacity(n_heads);
        for h in 0..n_heads {
            let qh = slice_cols(vq, h * dh, dh);
            let kh = slice_cols(vk, h * dh, dh);
            let vh = slice_cols(vv, h * dh, dh);
            let mut scores = matmul_nt(&qh, &kh);
            let s = T::from_f64(scale);
            for x in scores.data_mut() {
                *x = *x * s;
            }
            let p = softmax_rows_forward(&scores);
            let oh = matmul_nn(&p, &vh);
            scatter_cols(&mut out, &oh, h * dh);
            probs_rows.push(p);
        }
        let probs = Tensor::vstack(&probs_rows.iter().collect::<Vec<_>>()).unwrap();
        let needs = self.any_needs(&[q, k, v]);
        self.push(out, Op::Attention { q, k, v, n_heads, probs }, needs)
    }

    /// Cached attention probabilities of an attention node, stacked
    /// `[n_heads * N, N]` with head h in rows `[h*N, (h+1)*N)`.
    pub fn attention_probs(&self, id: VarId) -> Option<&Tensor<T>> {
        match &self.nodes[id.0].op {
            Op::Attention { probs, .. } => Some(probs),
            _ => None,
        }
    }

    /// Normalizes each row to unit Euclidean length: `x / (‖x‖₂ + eps)`.
    pub fn l2norm_rows(&mut self, a: VarId, eps: f64) -> VarId {
        let va = self.value(a);
        let eps = T::from_f64(eps);
        let mut data = Vec::with_capacity(va.numel());
        for i in 0..va.rows() {
            let xr = va.row(i);
            let mut sq = T::zero();
            for &x in xr {
                sq = sq + x * x;
            }
            let inv = (sq.sqrt() + eps).recip();
            for &x in xr {
                data.push(x * inv);
            }
        }
        let value = Tensor::from_vec_unchecked(va.shape().to_vec(), data);
        let needs = self.any_needs(&[a]);
        self.push(value, Op::L2NormRows { a, eps }, needs)
    }

    /// Fused mean cross-entropy against constant target distributions:
    /// `−(1/R) Σ_rows Σ_j target_ij · log softmax(inv_temp · z_i)_j`.
    ///
    /// The target is a constant, so no gradient flows into it; this is what
    /// makes a teacher distribution gradient-blocked by construction.
    pub fn ce_loss_mean(&mut self, logits: VarId, target: Tensor<T>, inv_temp: f64) -> VarId {
        let z = self.value(logits);
        assert_eq!(z.shape(), target.shape(), "ce_loss_mean: target shape");
        let (r, c) = (z.rows(), z.cols());
        let it = T::from_f64(inv_temp);
        let mut probs = Tensor::zeros(vec![r, c]);
        let mut total = T::zero();
        for i in 0..r {
            let zr = z.row(i);
            let mut mx = T::neg_infinity();
            for &x in zr {
                let a = x * it;
                if a > mx {
                    mx = a;
                }
            }
            let mut sum = T::zero();
            for &x in zr {
                sum = sum + (x * it - mx).exp();
            }
            let lse = mx + sum.ln();
            let tr = target.row(i);
            for j in 0..c {
                let logp = zr[j] * it - lse;
                probs.set2(i, j, logp.exp());
                total = total - tr[j] * logp;
            }
        }
        let loss = total * T::from_f64(1.0 / r as f64);
        let value = Tensor::from_vec_unchecked(vec![1, 1], vec![loss]);
        let needs = self.any_needs(&[logits]);
        self.push(
            value,
            Op::CeLossMean { logits, target, inv_temp: it, probs },
            needs,
        )
    }

    /// Runs the backward pass from a scalar output. Existing gradients are
    /// cleared first, so each call reflects exactly one output.
    pub fn backward(&mut self, out: VarId) -> Result<(), AutodiffError> {
        if self.nodes[out.0].value.numel() != 1 {
            return Err(AutodiffError::NonScalarOutput(
                self.nodes[out.0].value.shape().to_vec(),
            ));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[out.0].grad = Some(Tensor::full(
            self.nodes[out.0].value.shape().to_vec(),
            T::one(),
        ));
        for i in (0..=out.0).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let Some(g) = self.nodes[i].grad.take() else {
                continue;
            };
            self.dispatch_vjp(i, &g);
            self.nodes[i].grad = Some(g);
        }
        Ok(())
    }

    fn accumulate(&mut self, id: VarId, delta: Tensor<T>) {
        if !self.nodes[id.0].needs_grad {
            return;
        }
        match &mut self.nodes[id.0].grad {
            slot @ None => *slot = Some(delta),
            Some(g) => {
                debug_assert_eq!(g.shape(), delta.shape());
                for (gi, di) in g.data_mut().iter_mut().zip(delta.data()) {
                    *gi = *gi + *di;
                }
            }
        }
    }

    fn needs(&self, id: VarId) -> bool {
        self.nodes[id.0].needs_grad
    }

    /// Computes the VJP of node `i` into a delta list, then applies it.
    /// The two phases keep the borrows disjoint: the match only reads the
    /// tape, accumulation only writes grad slots.
    fn dispatch_vjp(&mut self, i: usize, g: &Tensor<T>) {
        let mut deltas: Vec<(VarId, Tensor<T>)> = Vec::new();
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul { a, b } => {
                if self.needs(*a) {
                    deltas.push((*a, matmul_nt(g, self.value(*b))));
                }
                if self.needs(*b) {
                    deltas.push((*b, matmul_tn(self.value(*a), g)));
                }
            }
            Op::Add { a, b } => {
                deltas.push((*a, g.clone()));
                deltas.push((*b, g.clone()));
            }
            Op::AddRow { a, row } => {
                let cols = g.cols();
                let mut rsum = vec![T::zero(); cols];
                for r in 0..g.rows() {
                    for (j, &x) in g.row(r).iter().enumerate() {
                        rsum[j] = rsum[j] + x;
                    }
                }
                deltas.push((*a, g.clone()));
                deltas.push((*row, Tensor::from_vec_unchecked(vec![1, cols], rsum)));
            }
            Op::MulScalar { a, c } => {
                let c = *c;
                let data = g.data().iter().map(|&x| x * c).collect();
                deltas.push((*a, Tensor::from_vec_unchecked(g.shape().to_vec(), data)));
            }
            Op::Gelu { a } => {
                let data = self
                    .value(*a)
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(&x, &gi)| gi * gelu_derivative(x))
                    .collect();
                deltas.push((*a, Tensor::from_vec_unchecked(g.shape().to_vec(), data)));
            }
            Op::SoftmaxRows { a } => {
                deltas.push((*a, softmax_rows_vjp(&self.nodes[i].value, g)));
            }
            Op::LayerNorm { a, gain, bias, stats } => {
                let x = self.value(*a);
                let gm = self.value(*gain).row(0);
                let (rows, cols) = (x.rows(), x.cols());
                let inv_d = T::from_f64(1.0 / cols as f64);
                let mut dx = Tensor::zeros(vec![rows, cols]);
                let mut dgain = vec![T::zero(); cols];
                let mut dbias = vec![T::zero(); cols];
                for (r, &(mu, inv_std)) in stats.iter().enumerate() {
                    let xr = x.row(r);
                    let gr = g.row(r);
                    let mut m1 = T::zero();
                    let mut m2 = T::zero();
                    for j in 0..cols {
                        let xhat = (xr[j] - mu) * inv_std;
                        let gg = gr[j] * gm[j];
                        m1 = m1 + gg;
                        m2 = m2 + gg * xhat;
                        dgain[j] = dgain[j] + gr[j] * xhat;
                        dbias[j] = dbias[j] + gr[j];
                    }
                    m1 = m1 * inv_d;
                    m2 = m2 * inv_d;
                    for j in 0..cols {
                        let xhat = (xr[j] - mu) * inv_std;
                        let gg = gr[j] * gm[j];
                        dx.set2(r, j, (gg - m1 - xhat * m2) * inv_std);
                    }
                }
                deltas.push((*a, dx));
                deltas.push((*gain, Tensor::from_vec_unchecked(vec![1, cols], dgain)));
                deltas.push((*bias, Tensor::from_vec_unchecked(vec![1, cols], dbias)));
            }
            Op::Transpose { a } => {
                deltas.push((*a, transpose(g)));
            }
            Op::ConcatRows { parts } => {
                let cols = g.cols();
                let mut start = 0;
                for &p in parts {
                    let rows = self.value(p).rows();
                    let data = g.data()[start * cols..(start + rows) * cols].to_vec();
                    deltas.push((p, Tensor::from_vec_unchecked(vec![rows, cols], data)));
                    start += rows;
                }
            }
            Op::SliceRows { a, start } => {
                let full = self.value(*a).shape().to_vec();
                let cols = full[1];
                let offset = start * cols;
                let mut da = Tensor::zeros(full);
                da.data_mut()[offset..offset + g.numel()].copy_from_slice(g.data());
                deltas.push((*a, da));
            }
            Op::Attention { q, k, v, n_heads, probs } => {
                let (vq, vk, vv) = (self.value(*q), self.value(*k), self.value(*v));
                let (n, d) = (vq.rows(), vq.cols());
                let dh = d / n_heads;
                let scale = T::from_f64(1.0 / (dh as f64).sqrt());
                let mut dq = Tensor::zeros(vec![n, d]);
                let mut dk = Tensor::zeros(vec![n, d]);
                let mut dv = Tensor::zeros(vec![n, d]);
                for h in 0..*n_heads {
                    let qh = slice_cols(vq, h * dh, dh);
                    let kh = slice_cols(vk, h * dh, dh);
                    let vh = slice_cols(vv, h * dh, dh);
                    let goh = slice_cols(g, h * dh, dh);
                    let ph_data = probs.data()[h * n * n..(h + 1) * n * n].to_vec();
                    let ph = Tensor::from_vec_unchecked(vec![n, n], ph_data);
                    let dvh = matmul_tn(&ph, &goh);
                    let dp = matmul_nt(&goh, &vh);
                    let mut ds = softmax_rows_vjp(&ph, &dp);
                    for x in ds.data_mut() {
                        *x = *x * scale;
                    }
                    let dqh = matmul_nn(&ds, &kh);
                    let dkh = matmul_tn(&ds, &qh);
                    scatter_cols(&mut dq, &dqh, h * dh);
                    scatter_cols(&mut dk, &dkh, h * dh);
                    scatter_cols(&mut dv, &dvh, h * dh);
                }
                deltas.push((*q, dq));
                deltas.push((*k, dk));
                deltas.push((*v, dv));
            }
            Op::L2NormRows { a, eps } => {
                let eps = *eps;
                let x = self.value(*a);
                let (rows, cols) = (x.rows(), x.cols());
                let mut dx = Tensor::zeros(vec![rows, cols]);
                for r in 0..rows {
                    let xr = x.row(r);
                    let gr = g.row(r);
                    let mut sq = T::zero();
                    let mut dot = T::zero();
                    for j in 0..cols {
                        sq = sq + xr[j] * xr[j];
                        dot = dot + gr[j] * xr[j];
                    }
                    let norm = sq.sqrt();
                    let denom = norm + eps;
                    if norm > T::zero() {
                        let coef = dot / (norm * denom * denom);
                        for (j, (&grj, &xrj)) in gr.iter().zip(xr).enumerate() {
                            dx.set2(r, j, grj / denom - xrj * coef);
                        }
                    } else {
                        for (j, &grj) in gr.iter().enumerate() {
                            dx.set2(r, j, grj / denom);
                        }
                    }
                }
                deltas.push((*a, dx));
            }
            Op::CeLossMean { logits, target, inv_temp, probs } => {
                let gs = g.data()[0];
                let coef = gs * *inv_temp * T::from_f64(1.0 / probs.rows() as f64);
                let data = probs
                    .data()
                    .iter()
                    .zip(target.data())
                    .map(|(&p, &t)| coef * (p - t))
                    .collect();
                let dz = Tensor::from_vec_unchecked(probs.shape().to_vec(), data);
                deltas.push((*logits, dz));
            }
        }
        for (id, delta) in deltas {
            self.accumulate(id, delta);
        }
    }
}

/// Column block `[., start .. start + len)` of a 2-D tensor.
fn slice_cols<T: Real>(t: &Tensor<T>, start: usize, len: usize) -> Tensor<T> {
    let rows = t.rows();
    let mut data = Vec::with_capacity(rows * len);
    for i in 0..rows {
        data.extend_from_slice(&t.row(i)[start..start + len]);
    }
    Tensor::from_vec_unchecked(vec![rows, len], data)
}

/// Adds `src` into the column block of `dst` starting at `start`.
fn scatter_cols<T: Real>(dst: &mut Tensor<T>, src: &Tensor<T>, start: usize) {
    let (rows, src_cols, dst_cols) = (src.rows(), src.cols(), dst.cols());
    for i in 0..rows {
        let srow = src.row(i);
        let drow = &mut dst.data_mut()[i * dst_cols + start..i * dst_cols + start + src_cols];
        for (d, &s) in drow.iter_mut().zip(srow) {
            *d = *d + s;
        }
    }
}

fn softmax_rows_forward<T: Real>(z: &Tensor<T>) -> Tensor<T> {
    let (rows, cols) = (z.rows(), z.cols());
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let zr = z.row(i);
        let mut mx = T::neg_infinity();
        for &x in zr {
            if x > mx {
                mx = x;
            }
        }
        let base = data.len();
        let mut sum = T::zero();
        for &x in zr {
            let e = (x - mx).exp();
            sum = sum + e;
            data.push(e);
        }
        let inv = sum.recip();
        for x in &mut data[base..] {
            *x = *x * inv;
        }
    }
    Tensor::from_vec_unchecked(vec![rows, cols], data)
}

/// Row-wise softmax VJP: `dz_j = p_j (g_j − Σ_k g_k p_k)`.
fn softmax_rows_vjp<T: Real>(p: &Tensor<T>, g: &Tensor<T>) -> Tensor<T> {
    let (rows, cols) = (p.rows(), p.cols());
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let (pr, gr) = (p.row(i), g.row(i));
        let mut dot = T::zero();
        for j in 0..cols {
            dot = dot + pr[j] * gr[j];
        }
        for j in 0..cols {
            data.push(pr[j] * (gr[j] - dot));
        }
    }
    Tensor::from_vec_unchecked(vec![rows, cols], data)
}

const GELU_SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_CUBIC: f64 = 0.044715;

fn gelu_scalar<T: Real>(x: T) -> T {
    let c = T::from_f64(GELU_SQRT_2_OVER_PI);
    let k = T::from_f64(GELU_CUBIC);
    let half = T::from_f64(0.5);
    let u = c * (x + k * x * x * x);
    half * x * (T::one() + u.tanh())
}

fn gelu_derivative<T: Real>(x: T) -> T {
    let c = T::from_f64(GELU_SQRT_2_OVER_PI);
    let k = T::from_f64(GELU_CUBIC);
    let three_k = T::from_f64(3.0 * GELU_CUBIC);
    let half = T::from_f64(0.5);
    let u = c * (x + k * x * x * x);
    let t = u.tanh();
    let sech2 = T::one() - t * t;
    half * (T::one() + t) + half * x * sech2 * c * (T::one() + three_k * x * x)
}
