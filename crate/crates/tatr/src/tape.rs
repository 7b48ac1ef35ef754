//! Dynamic reverse-mode differentiation tape.
//!
//! Values live in a flat buffer arena; every primitive records enough to
//! replay itself backward. The graph is rebuilt per forward pass, so the
//! same code stays correct across all model variants regardless of which
//! branches they exercise.

use crate::error::{Error, Result};
use crate::tensor::{
    log_sum_exp, matmul_acc, softmax_into, transpose_into, Real, Tensor,
};

/// Handle to a value on the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValueId(usize);

#[derive(Clone, Debug)]
enum Op {
    /// out = A(m×k) · B(k×n)
    MatMul {
        a: ValueId,
        b: ValueId,
        out: ValueId,
        m: usize,
        k: usize,
        n: usize,
    },
    /// out[r,c] = x[r,c] + bias[c]
    AddBiasRows {
        x: ValueId,
        bias: ValueId,
        out: ValueId,
        rows: usize,
        cols: usize,
    },
    Relu {
        x: ValueId,
        out: ValueId,
    },
    Tanh {
        x: ValueId,
        out: ValueId,
    },
    /// out[c] = mean over rows of x[r,c]
    MeanRows {
        x: ValueId,
        out: ValueId,
        rows: usize,
        cols: usize,
    },
    /// Vector softmax.
    Softmax {
        x: ValueId,
        out: ValueId,
    },
    /// out = −log softmax(logits)[label], a scalar.
    CrossEntropy {
        logits: ValueId,
        label: usize,
        out: ValueId,
    },
    /// out[c] = Σ_i weights[i] · rows[i,c]
    Attend {
        weights: ValueId,
        rows: ValueId,
        out: ValueId,
        n: usize,
        width: usize,
    },
    /// Stack equal-length vectors as matrix rows.
    StackRows {
        parts: Vec<ValueId>,
        out: ValueId,
        cols: usize,
    },
    /// Elementwise sum of two same-shape values.
    Add {
        a: ValueId,
        b: ValueId,
        out: ValueId,
    },
    /// out = factor · x
    Scale {
        x: ValueId,
        out: ValueId,
        factor: f64,
    },
}

struct Slot<F> {
    data: Vec<F>,
    shape: Vec<usize>,
}

/// Wengert tape: forward ops append, `backward` replays in reverse.
pub struct Tape<F> {
    slots: Vec<Slot<F>>,
    ops: Vec<Op>,
    grads: Vec<Option<Vec<F>>>,
}

impl<F: Real> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Tape {
            slots: Vec::new(),
            ops: Vec::new(),
            grads: Vec::new(),
        }
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<F>) -> ValueId {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        let id = ValueId(self.slots.len());
        self.slots.push(Slot { data, shape });
        self.grads.push(None);
        id
    }

    /// Register a leaf value (input or parameter).
    pub fn leaf(&mut self, tensor: &Tensor<F>) -> ValueId {
        self.push(tensor.shape().to_vec(), tensor.data().to_vec())
    }

    /// Register a leaf from raw parts.
    pub fn leaf_from(&mut self, shape: &[usize], data: Vec<F>) -> Result<ValueId> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::Invalid(format!(
                "leaf shape {:?} does not match {} elements",
                shape,
                data.len()
            )));
        }
        Ok(self.push(shape.to_vec(), data))
    }

    pub fn value(&self, id: ValueId) -> &[F] {
        &self.slots[id.0].data
    }

    pub fn shape(&self, id: ValueId) -> &[usize] {
        &self.slots[id.0].shape
    }

    pub fn numel(&self, id: ValueId) -> usize {
        self.slots[id.0].data.len()
    }

    /// Gradient accumulated for `id`, if any flowed to it.
    pub fn grad(&self, id: ValueId) -> Option<&[F]> {
        self.grads[id.0].as_deref()
    }

    /// Gradient for `id`, with zeros for values the loss never reached.
    pub fn grad_or_zeros(&self, id: ValueId) -> Vec<F> {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => vec![F::zero(); self.slots[id.0].data.len()],
        }
    }

    fn shape_err(&self, op: &'static str, a: ValueId, b: ValueId) -> Error {
        Error::Shape {
            op,
            left: self.shape(a).to_vec(),
            right: self.shape(b).to_vec(),
        }
    }

    fn matrix_rows(&self, id: ValueId) -> Option<(usize, usize)> {
        match self.shape(id) {
            [n] => Some((1, *n)),
            [r, c] => Some((*r, *c)),
            _ => None,
        }
    }

    fn matrix_cols(&self, id: ValueId) -> Option<(usize, usize)> {
        match self.shape(id) {
            [n] => Some((*n, 1)),
            [r, c] => Some((*r, *c)),
            _ => None,
        }
    }

    // ── Primitives ───────────────────────────────────────────────────

    /// Matrix product; 1-D lhs acts as a row, 1-D rhs as a column.
    pub fn matmul(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        let (m, ka) = self
            .matrix_rows(a)
            .ok_or_else(|| self.shape_err("matmul", a, b))?;
        let (kb, n) = self
            .matrix_cols(b)
            .ok_or_else(|| self.shape_err("matmul", a, b))?;
        if ka != kb {
            return Err(self.shape_err("matmul", a, b));
        }
        let mut out = vec![F::zero(); m * n];
        matmul_acc(self.value(a), self.value(b), &mut out, m, ka, n);
        let id = self.push(vec![m, n], out);
        self.ops.push(Op::MatMul {
            a,
            b,
            out: id,
            m,
            k: ka,
            n,
        });
        Ok(id)
    }

    /// Broadcast-add a length-`cols` bias to every row of an r×c matrix.
    pub fn add_bias_rows(&mut self, x: ValueId, bias: ValueId) -> Result<ValueId> {
        let (rows, cols) = self
            .matrix_rows(x)
            .ok_or_else(|| self.shape_err("add_bias_rows", x, bias))?;
        if self.numel(bias) != cols {
            return Err(self.shape_err("add_bias_rows", x, bias));
        }
        let mut out = self.value(x).to_vec();
        for r in 0..rows {
            for c in 0..cols {
                out[r * cols + c] += self.value(bias)[c];
            }
        }
        let id = self.push(self.shape(x).to_vec(), out);
        self.ops.push(Op::AddBiasRows {
            x,
            bias,
            out: id,
            rows,
            cols,
        });
        Ok(id)
    }

    pub fn relu(&mut self, x: ValueId) -> ValueId {
        let out: Vec<F> = self
            .value(x)
            .iter()
            .map(|&v| if v > F::zero() { v } else { F::zero() })
            .collect();
        let id = self.push(self.shape(x).to_vec(), out);
        self.ops.push(Op::Relu { x, out: id });
        id
    }

    pub fn tanh(&mut self, x: ValueId) -> ValueId {
        let out: Vec<F> = self.value(x).iter().map(|v| v.tanh()).collect();
        let id = self.push(self.shape(x).to_vec(), out);
        self.ops.push(Op::Tanh { x, out: id });
        id
    }

    /// Column means of an r×c matrix, yielding a length-c vector.
    pub fn mean_rows(&mut self, x: ValueId) -> Result<ValueId> {
        let (rows, cols) = self.matrix_rows(x).ok_or_else(|| Error::Invalid(format!(
            "mean_rows expects a matrix, got shape {:?}",
            self.shape(x)
        )))?;
        if rows == 0 {
            return Err(Error::Invalid("mean_rows over zero rows".into()));
        }
        let inv = F::from_f64(1.0) / F::from_f64(rows as f64);
        let mut out = vec![F::zero(); cols];
        for r in 0..rows {
            for c in 0..cols {
                out[c] += self.value(x)[r * cols + c];
            }
        }
        for o in out.iter_mut() {
            *o *= inv;
        }
        let id = self.push(vec![cols], out);
        self.ops.push(Op::MeanRows {
            x,
            out: id,
            rows,
            cols,
        });
        Ok(id)
    }

    /// Stable softmax over a vector (or n×1 matrix).
    pub fn softmax(&mut self, x: ValueId) -> Result<ValueId> {
        let n = self.numel(x);
        if n == 0 {
            return Err(Error::Invalid("softmax of empty value".into()));
        }
        let mut out = vec![F::zero(); n];
        softmax_into(self.value(x), &mut out);
        let id = self.push(vec![n], out);
        self.ops.push(Op::Softmax { x, out: id });
        Ok(id)
    }

    /// Scalar cross-entropy of a logit vector against a class index.
    pub fn cross_entropy(&mut self, logits: ValueId, label: usize) -> Result<ValueId> {
        let c = self.numel(logits);
        if label >= c {
            return Err(Error::Invalid(format!(
                "label {} out of range for {} classes",
                label, c
            )));
        }
        let lse = log_sum_exp(self.value(logits));
        let mut loss = lse - self.value(logits)[label];
        if loss < F::zero() {
            loss = F::zero();
        }
        let id = self.push(vec![1], vec![loss]);
        self.ops.push(Op::CrossEntropy {
            logits,
            label,
            out: id,
        });
        Ok(id)
    }

    /// Weighted sum of matrix rows: out[c] = Σ_i w[i]·rows[i,c].
    pub fn attend(&mut self, weights: ValueId, rows: ValueId) -> Result<ValueId> {
        let (n, width) = self
            .matrix_rows(rows)
            .ok_or_else(|| self.shape_err("attend", weights, rows))?;
        if self.numel(weights) != n {
            return Err(self.shape_err("attend", weights, rows));
        }
        let mut out = vec![F::zero(); width];
        for i in 0..n {
            let w = self.value(weights)[i];
            for c in 0..width {
                out[c] += w * self.value(rows)[i * width + c];
            }
        }
        let id = self.push(vec![width], out);
        self.ops.push(Op::Attend {
            weights,
            rows,
            out: id,
            n,
            width,
        });
        Ok(id)
    }

    /// Stack equal-length vectors into a matrix, one per row.
    pub fn stack_rows(&mut self, parts: &[ValueId]) -> Result<ValueId> {
        if parts.is_empty() {
            return Err(Error::Invalid("stack_rows of zero rows".into()));
        }
        let cols = self.numel(parts[0]);
        let mut data = Vec::with_capacity(parts.len() * cols);
        for &p in parts {
            if self.numel(p) != cols {
                return Err(self.shape_err("stack_rows", parts[0], p));
            }
            data.extend_from_slice(self.value(p));
        }
        let id = self.push(vec![parts.len(), cols], data);
        self.ops.push(Op::StackRows {
            parts: parts.to_vec(),
            out: id,
            cols,
        });
        Ok(id)
    }

    pub fn add(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        if self.shape(a) != self.shape(b) {
            return Err(self.shape_err("add", a, b));
        }
        let out: Vec<F> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| x + y)
            .collect();
        let id = self.push(self.shape(a).to_vec(), out);
        self.ops.push(Op::Add { a, b, out: id });
        Ok(id)
    }

    pub fn scale(&mut self, x: ValueId, factor: f64) -> ValueId {
        let f = F::from_f64(factor);
        let out: Vec<F> = self.value(x).iter().map(|&v| v * f).collect();
        let id = self.push(self.shape(x).to_vec(), out);
        self.ops.push(Op::Scale {
            x,
            out: id,
            factor,
        });
        id
    }

    // ── Backward ─────────────────────────────────────────────────────

    fn accumulate(&mut self, id: ValueId, delta: &[F]) {
        match &mut self.grads[id.0] {
            Some(g) => {
                for (gi, di) in g.iter_mut().zip(delta) {
                    *gi += *di;
                }
            }
            None => self.grads[id.0] = Some(delta.to_vec()),
        }
    }

    /// Replay the tape in reverse from a scalar loss node.
    pub fn backward(&mut self, loss: ValueId) -> Result<()> {
        if self.numel(loss) != 1 {
            return Err(Error::Invalid(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        if !self.value(loss)[0].is_finite() {
            return Err(Error::Numeric("loss is not finite".into()));
        }
        for g in self.grads.iter_mut() {
            *g = None;
        }
        self.grads[loss.0] = Some(vec![F::one()]);

        for idx in (0..self.ops.len()).rev() {
            let op = self.ops[idx].clone();
            self.backward_op(&op);
        }
        Ok(())
    }

    fn backward_op(&mut self, op: &Op) {
        match *op {
            Op::MatMul { a, b, out, m, k, n } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                // dA = dOut · Bᵀ
                let mut b_t = vec![F::zero(); k * n];
                transpose_into(self.value(b), &mut b_t, k, n);
                let mut d_a = vec![F::zero(); m * k];
                matmul_acc(&d_out, &b_t, &mut d_a, m, n, k);
                self.accumulate(a, &d_a);
                // dB = Aᵀ · dOut
                let mut a_t = vec![F::zero(); m * k];
                transpose_into(self.value(a), &mut a_t, m, k);
                let mut d_b = vec![F::zero(); k * n];
                matmul_acc(&a_t, &d_out, &mut d_b, k, m, n);
                self.accumulate(b, &d_b);
            }
            Op::AddBiasRows {
                x,
                bias,
                out,
                rows,
                cols,
            } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                self.accumulate(x, &d_out);
                let mut d_bias = vec![F::zero(); cols];
                for r in 0..rows {
                    for c in 0..cols {
                        d_bias[c] += d_out[r * cols + c];
                    }
                }
                self.accumulate(bias, &d_bias);
            }
            Op::Relu { x, out } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                let d_x: Vec<F> = self
                    .value(x)
                    .iter()
                    .zip(&d_out)
                    .map(|(&v, &d)| if v > F::zero() { d } else { F::zero() })
                    .collect();
                self.accumulate(x, &d_x);
            }
            Op::Tanh { x, out } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                let d_x: Vec<F> = self
                    .value(out)
                    .iter()
                    .zip(&d_out)
                    .map(|(&y, &d)| d * (F::one() - y * y))
                    .collect();
                self.accumulate(x, &d_x);
            }
            Op::MeanRows { x, out, rows, cols } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                let inv = F::from_f64(1.0 / rows as f64);
                let mut d_x = vec![F::zero(); rows * cols];
                for r in 0..rows {
                    for c in 0..cols {
                        d_x[r * cols + c] = d_out[c] * inv;
                    }
                }
                self.accumulate(x, &d_x);
            }
            Op::Softmax { x, out } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                let y = self.value(out);
                let dot: F = y.iter().zip(&d_out).map(|(&yi, &di)| yi * di).sum();
                let d_x: Vec<F> = y
                    .iter()
                    .zip(&d_out)
                    .map(|(&yi, &di)| yi * (di - dot))
                    .collect();
                self.accumulate(x, &d_x);
            }
            Op::CrossEntropy { logits, label, out } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                let scale = d_out[0];
                let n = self.numel(logits);
                let mut probs = vec![F::zero(); n];
                softmax_into(self.value(logits), &mut probs);
                probs[label] -= F::one();
                for p in probs.iter_mut() {
                    *p *= scale;
                }
                self.accumulate(logits, &probs);
            }
            Op::Attend {
                weights,
                rows,
                out,
                n,
                width,
            } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                let mut d_w = vec![F::zero(); n];
                let mut d_rows = vec![F::zero(); n * width];
                for i in 0..n {
                    let wi = self.value(weights)[i];
                    let mut acc = F::zero();
                    for c in 0..width {
                        let s = self.value(rows)[i * width + c];
                        acc += d_out[c] * s;
                        d_rows[i * width + c] = wi * d_out[c];
                    }
                    d_w[i] = acc;
                }
                self.accumulate(weights, &d_w);
                self.accumulate(rows, &d_rows);
            }
            Op::StackRows {
                ref parts,
                out,
                cols,
            } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                for (i, &p) in parts.iter().enumerate() {
                    self.accumulate(p, &d_out[i * cols..(i + 1) * cols]);
                }
            }
            Op::Add { a, b, out } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                self.accumulate(a, &d_out);
                self.accumulate(b, &d_out);
            }
            Op::Scale { x, out, factor } => {
                let Some(d_out) = self.grads[out.0].clone() else {
                    return;
                };
                let f = F::from_f64(factor);
                let d_x: Vec<F> = d_out.iter().map(|&d| d * f).collect();
                self.accumulate(x, &d_x);
            }
        }
    }
}
