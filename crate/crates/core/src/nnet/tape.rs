//! Reverse-mode differentiation over a recorded sequence of tensor ops.

use std::hash::{Hash, Hasher};
use std::rc::Rc;

use rustc_hash::FxHasher;

use super::{NnetError, ParamStore, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

/// Per-row segment assignment shared between ops.
pub type Segments = Rc<[usize]>;

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Param(String),
    Linear { x: usize, w: usize, b: Option<usize> },
    Relu(usize),
    Sigmoid(usize),
    Exp(usize),
    Concat(Vec<usize>),
    Gather { x: usize, idx: Segments },
    SegmentMean { x: usize, seg: Segments, counts: Vec<usize> },
    SegmentWeightedMean { x: usize, w: usize, seg: Segments, denom: Vec<f64> },
    SubSegmentMax { x: usize },
    Add(usize, usize),
    Mul(usize, usize),
    Sum(usize),
    Scale(usize, f64),
    Bce { z: usize, labels: Rc<[f64]>, lambda: f64, inside: Vec<bool> },
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

pub const CLIP: f64 = 1e-7;

/// A forward computation recorded for later differentiation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    kinks: FxHasher,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn shape_err(what: &str, a: &Tensor, b: &Tensor) -> NnetError {
    NnetError::ShapeMismatch(format!("{what}: {:?} vs {:?}", a.shape, b.shape))
}

fn check_segments(seg: &[usize], n: usize) -> Result<(), NnetError> {
    match seg.iter().find(|&&s| s >= n) {
        Some(&s) => Err(NnetError::IndexOutOfRange { index: s, len: n }),
        None => Ok(()),
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Hash of every activation pattern seen so far (relu signs, loss
    /// clipping); differs between two evaluations iff some kink was crossed.
    pub fn kink_signature(&self) -> u64 {
        self.kinks.finish()
    }

    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<Var, NnetError> {
        let t = store.require(name)?.clone();
        Ok(self.push(t, Op::Param(name.to_string())))
    }

    /// `x · Wᵀ + b` for `x: [n, d_in]`, `W: [d_out, d_in]`, `b: [d_out]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var, NnetError> {
        let (xv, wv) = (self.value(x), self.value(w));
        if wv.shape.len() != 2 || xv.cols() != wv.shape[1] {
            return Err(shape_err("linear", xv, wv));
        }
        let (n, din, dout) = (xv.rows(), wv.shape[1], wv.shape[0]);
        let mut out = vec![0.0; n * dout];
        for i in 0..n {
            let xr = &xv.data[i * din..(i + 1) * din];
            for o in 0..dout {
                let wr = &wv.data[o * din..(o + 1) * din];
                out[i * dout + o] = xr.iter().zip(wr).map(|(a, b)| a * b).sum();
            }
        }
        if let Some(b) = b {
            let bv = self.value(b);
            if bv.len() != dout {
                return Err(shape_err("linear bias", bv, wv));
            }
            for i in 0..n {
                for o in 0..dout {
                    out[i * dout + o] += bv.data[o];
                }
            }
        }
        let t = Tensor::matrix(n, dout, out);
        Ok(self.push(t, Op::Linear { x: x.0, w: w.0, b: b.map(|b| b.0) }))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let mut mask = Vec::with_capacity(xv.len());
        let data = xv
            .data
            .iter()
            .map(|&v| {
                mask.push(v > 0.0);
                v.max(0.0)
            })
            .collect();
        let t = Tensor { shape: xv.shape.clone(), data };
        mask.hash(&mut self.kinks);
        self.push(t, Op::Relu(x.0))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let t = Tensor { shape: xv.shape.clone(), data: xv.data.iter().map(|&v| sigmoid(v)).collect() };
        self.push(t, Op::Sigmoid(x.0))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let t = Tensor { shape: xv.shape.clone(), data: xv.data.iter().map(|v| v.exp()).collect() };
        self.push(t, Op::Exp(x.0))
    }

    /// Column-wise concatenation of matrices with equal row counts.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, NnetError> {
        let n = self.value(parts[0]).rows();
        let mut cols = 0;
        for &p in parts {
            let v = self.value(p);
            if v.rows() != n {
                return Err(shape_err("concat", self.value(parts[0]), v));
            }
            cols += v.cols();
        }
        let mut data = Vec::with_capacity(n * cols);
        for i in 0..n {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(i));
            }
        }
        Ok(self.push(Tensor::matrix(n, cols, data), Op::Concat(parts.iter().map(|p| p.0).collect())))
    }

    /// Rows `x[idx[0]], x[idx[1]], ...`.
    pub fn gather_rows(&mut self, x: Var, idx: Segments) -> Result<Var, NnetError> {
        let xv = self.value(x);
        check_segments(&idx, xv.rows())?;
        let c = xv.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx.iter() {
            data.extend_from_slice(xv.row(i));
        }
        let t = Tensor::matrix(idx.len(), c, data);
        Ok(self.push(t, Op::Gather { x: x.0, idx }))
    }

    /// Mean of the rows of `x` in each segment; empty segments give zeros.
    pub fn segment_mean(&mut self, x: Var, seg: Segments, n: usize) -> Result<Var, NnetError> {
        let xv = self.value(x);
        if seg.len() != xv.rows() || xv.is_empty() && !seg.is_empty() {
            return Err(NnetError::ShapeMismatch(format!("segment list of {} for {} rows", seg.len(), xv.rows())));
        }
        check_segments(&seg, n)?;
        let c = if seg.is_empty() { xv.shape.get(1).copied().unwrap_or(0) } else { xv.cols() };
        let mut counts = vec![0usize; n];
        let mut data = vec![0.0; n * c];
        for (j, &s) in seg.iter().enumerate() {
            counts[s] += 1;
            for (d, v) in data[s * c..(s + 1) * c].iter_mut().zip(xv.row(j)) {
                *d += v;
            }
        }
        for s in 0..n {
            if counts[s] > 0 {
                let k = counts[s] as f64;
                data[s * c..(s + 1) * c].iter_mut().for_each(|d| *d /= k);
            }
        }
        Ok(self.push(Tensor::matrix(n, c, data), Op::SegmentMean { x: x.0, seg, counts }))
    }

    /// `Σ w_j x_j / Σ w_j` per segment, with `w: [m, 1]` positive weights.
    pub fn segment_weighted_mean(&mut self, x: Var, w: Var, seg: Segments, n: usize) -> Result<Var, NnetError> {
        let (xv, wv) = (self.value(x), self.value(w));
        if seg.len() != xv.rows() || wv.len() != seg.len() {
            return Err(shape_err("segment_weighted_mean", xv, wv));
        }
        check_segments(&seg, n)?;
        if let Some(&bad) = wv.data.iter().find(|&&a| a < 0.0) {
            return Err(NnetError::ShapeMismatch(format!("negative aggregation weight {bad}")));
        }
        let c = if seg.is_empty() { xv.shape.get(1).copied().unwrap_or(0) } else { xv.cols() };
        let mut denom = vec![0.0; n];
        let mut data = vec![0.0; n * c];
        for (j, &s) in seg.iter().enumerate() {
            let a = wv.data[j];
            denom[s] += a;
            for (d, v) in data[s * c..(s + 1) * c].iter_mut().zip(xv.row(j)) {
                *d += a * v;
            }
        }
        for s in 0..n {
            if denom[s] > 0.0 {
                let k = denom[s];
                data[s * c..(s + 1) * c].iter_mut().for_each(|d| *d /= k);
            }
        }
        Ok(self.push(Tensor::matrix(n, c, data), Op::SegmentWeightedMean { x: x.0, w: w.0, seg, denom }))
    }

    /// `x_j − max_{k in seg(j)} x_k` for a column `x: [m, 1]`. The max is
    /// treated as a constant when differentiating.
    pub fn sub_segment_max(&mut self, x: Var, seg: &[usize], n: usize) -> Result<Var, NnetError> {
        let xv = self.value(x);
        if xv.len() != seg.len() {
            return Err(NnetError::ShapeMismatch(format!("{} values for {} segment entries", xv.len(), seg.len())));
        }
        check_segments(seg, n)?;
        let mut max = vec![f64::NEG_INFINITY; n];
        for (j, &s) in seg.iter().enumerate() {
            max[s] = max[s].max(xv.data[j]);
        }
        let data = seg.iter().enumerate().map(|(j, &s)| xv.data[j] - max[s]).collect();
        let t = Tensor { shape: xv.shape.clone(), data };
        Ok(self.push(t, Op::SubSegmentMax { x: x.0 }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NnetError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape != bv.shape {
            return Err(shape_err("add", av, bv));
        }
        let t = Tensor { shape: av.shape.clone(), data: av.data.iter().zip(&bv.data).map(|(x, y)| x + y).collect() };
        Ok(self.push(t, Op::Add(a.0, b.0)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NnetError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape != bv.shape {
            return Err(shape_err("mul", av, bv));
        }
        let t = Tensor { shape: av.shape.clone(), data: av.data.iter().zip(&bv.data).map(|(x, y)| x * y).collect() };
        Ok(self.push(t, Op::Mul(a.0, b.0)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data.iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x.0))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let xv = self.value(x);
        let t = Tensor { shape: xv.shape.clone(), data: xv.data.iter().map(|v| v * c).collect() };
        self.push(t, Op::Scale(x.0, c))
    }

    /// Weighted binary cross entropy summed over rows of the logit column
    /// `z`, with probabilities clipped to `[1e-7, 1 - 1e-7]`:
    /// `−Σ λ p log σ(z) + (1−λ)(1−p) log(1−σ(z))`.
    pub fn weighted_bce(&mut self, z: Var, labels: Rc<[f64]>, lambda: f64) -> Result<Var, NnetError> {
        let zv = self.value(z);
        if zv.len() != labels.len() {
            return Err(NnetError::ShapeMismatch(format!("{} logits for {} labels", zv.len(), labels.len())));
        }
        let mut loss = 0.0;
        let mut inside = Vec::with_capacity(labels.len());
        for (&zi, &p) in zv.data.iter().zip(labels.iter()) {
            let s = sigmoid(zi);
            let inn = (CLIP..=1.0 - CLIP).contains(&s);
            inside.push(inn);
            let s = s.clamp(CLIP, 1.0 - CLIP);
            loss -= lambda * p * s.ln() + (1.0 - lambda) * (1.0 - p) * (1.0 - s).ln();
        }
        inside.hash(&mut self.kinks);
        Ok(self.push(Tensor::scalar(loss), Op::Bce { z: z.0, labels, lambda, inside }))
    }

    /// Gradients of the scalar `loss` with respect to every recorded
    /// parameter, summed per parameter name.
    pub fn backward(&self, loss: Var, store: &ParamStore) -> Result<ParamStore, NnetError> {
        if self.value(loss).len() != 1 {
            return Err(NnetError::NonScalarLoss);
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        let mut out = store.zeros_like();
        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            let send = |target: usize, delta: Vec<f64>, grads: &mut Vec<Option<Vec<f64>>>| match &mut grads[target] {
                Some(acc) => acc.iter_mut().zip(delta).for_each(|(a, d)| *a += d),
                slot @ None => *slot = Some(delta),
            };
            match &node.op {
                Op::Leaf => {}
                Op::Param(name) => {
                    if let Some(t) = out.get_mut(name) {
                        t.data.iter_mut().zip(&g).for_each(|(a, d)| *a += d);
                    }
                }
                Op::Linear { x, w, b } => {
                    let (xv, wv) = (&self.nodes[*x].value, &self.nodes[*w].value);
                    let (n, din, dout) = (xv.rows(), wv.shape[1], wv.shape[0]);
                    let mut dx = vec![0.0; n * din];
                    let mut dw = vec![0.0; dout * din];
                    for i in 0..n {
                        for o in 0..dout {
                            let go = g[i * dout + o];
                            if go == 0.0 {
                                continue;
                            }
                            for k in 0..din {
                                dx[i * din + k] += go * wv.data[o * din + k];
                                dw[o * din + k] += go * xv.data[i * din + k];
                            }
                        }
                    }
                    if let Some(b) = b {
                        let mut db = vec![0.0; dout];
                        for i in 0..n {
                            for o in 0..dout {
                                db[o] += g[i * dout + o];
                            }
                        }
                        send(*b, db, &mut grads);
                    }
                    send(*x, dx, &mut grads);
                    send(*w, dw, &mut grads);
                }
                Op::Relu(x) => {
                    let xv = &self.nodes[*x].value;
                    let d = g.iter().zip(&xv.data).map(|(g, &v)| if v > 0.0 { *g } else { 0.0 }).collect();
                    send(*x, d, &mut grads);
                }
                Op::Sigmoid(x) => {
                    let d = g.iter().zip(&node.value.data).map(|(g, y)| g * y * (1.0 - y)).collect();
                    send(*x, d, &mut grads);
                }
                Op::Exp(x) => {
                    let d = g.iter().zip(&node.value.data).map(|(g, y)| g * y).collect();
                    send(*x, d, &mut grads);
                }
                Op::Concat(parts) => {
                    let n = node.value.rows();
                    let total = node.value.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let c = self.nodes[p].value.cols();
                        let mut d = Vec::with_capacity(n * c);
                        for i in 0..n {
                            d.extend_from_slice(&g[i * total + offset..i * total + offset + c]);
                        }
                        offset += c;
                        send(p, d, &mut grads);
                    }
                }
                Op::Gather { x, idx } => {
                    let xv = &self.nodes[*x].value;
                    let c = xv.cols();
                    let mut d = vec![0.0; xv.len()];
                    for (j, &i) in idx.iter().enumerate() {
                        for k in 0..c {
                            d[i * c + k] += g[j * c + k];
                        }
                    }
                    send(*x, d, &mut grads);
                }
                Op::SegmentMean { x, seg, counts } => {
                    let xv = &self.nodes[*x].value;
                    let c = node.value.cols();
                    let mut d = vec![0.0; xv.len()];
                    for (j, &s) in seg.iter().enumerate() {
                        let k = counts[s] as f64;
                        for q in 0..c {
                            d[j * c + q] = g[s * c + q] / k;
                        }
                    }
                    send(*x, d, &mut grads);
                }
                Op::SegmentWeightedMean { x, w, seg, denom } => {
                    let (xv, wv) = (&self.nodes[*x].value, &self.nodes[*w].value);
                    let c = node.value.cols();
                    let mut dx = vec![0.0; xv.len()];
                    let mut dw = vec![0.0; wv.len()];
                    for (j, &s) in seg.iter().enumerate() {
                        let den = denom[s];
                        if den <= 0.0 {
                            continue;
                        }
                        let a = wv.data[j];
                        let mut acc = 0.0;
                        for q in 0..c {
                            let gs = g[s * c + q];
                            dx[j * c + q] = gs * a / den;
                            acc += gs * (xv.data[j * c + q] - node.value.data[s * c + q]);
                        }
                        dw[j] = acc / den;
                    }
                    send(*x, dx, &mut grads);
                    send(*w, dw, &mut grads);
                }
                Op::SubSegmentMax { x } => send(*x, g, &mut grads),
                Op::Add(a, b) => {
                    send(*a, g.clone(), &mut grads);
                    send(*b, g, &mut grads);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    let da = g.iter().zip(&bv.data).map(|(g, y)| g * y).collect();
                    let db = g.iter().zip(&av.data).map(|(g, x)| g * x).collect();
                    send(*a, da, &mut grads);
                    send(*b, db, &mut grads);
                }
                Op::Sum(x) => {
                    let n = self.nodes[*x].value.len();
                    send(*x, vec![g[0]; n], &mut grads);
                }
                Op::Scale(x, c) => send(*x, g.iter().map(|v| v * c).collect(), &mut grads),
                Op::Bce { z, labels, lambda, inside } => {
                    let zv = &self.nodes[*z].value;
                    let d = zv
                        .data
                        .iter()
                        .zip(labels.iter())
                        .zip(inside)
                        .map(|((&zi, &p), &inn)| {
                            if !inn {
                                return 0.0;
                            }
                            let s = sigmoid(zi);
                            g[0] * (-lambda * p * (1.0 - s) + (1.0 - lambda) * (1.0 - p) * s)
                        })
                        .collect();
                    send(*z, d, &mut grads);
                }
            }
        }
        Ok(out)
    }
}
