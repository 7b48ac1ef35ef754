//! Dense row-major tensors and the raw numeric kernels shared with the tape.
//!
//! Everything is generic over [`Real`]: f32 is the working precision for
//! training and evaluation, f64 is used where finite differences need the
//! extra headroom (gradient checking, paired-run comparisons).

use crate::error::{Error, Result};
use num_traits::Float;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Scalar element type for all numeric work in this crate.
pub trait Real:
    Float + num_traits::NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn from_f32(v: f32) -> Self;
    fn as_f64(self) -> f64;
    fn as_f32(self) -> f32;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn from_f32(v: f32) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn as_f32(self) -> f32 {
        self
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn from_f32(v: f32) -> Self {
        v as f64
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn as_f32(self) -> f32 {
        self as f32
    }
}

/// Dense tensor with row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Real> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![F::zero(); numel],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<F>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Invalid(format!(
                "shape {:?} implies {} elements, got {}",
                shape,
                numel,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn scalar(v: F) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn vector(data: Vec<F>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Interpret the shape as a matrix: explicit 2-D, or a 1-D vector
    /// promoted to a single row.
    pub(crate) fn as_matrix_rows(&self) -> Option<(usize, usize)> {
        match self.shape.len() {
            1 => Some((1, self.shape[0])),
            2 => Some((self.shape[0], self.shape[1])),
            _ => None,
        }
    }

    /// Same, but a 1-D vector is promoted to a single column.
    pub(crate) fn as_matrix_cols(&self) -> Option<(usize, usize)> {
        match self.shape.len() {
            1 => Some((self.shape[0], 1)),
            2 => Some((self.shape[0], self.shape[1])),
            _ => None,
        }
    }
}

// ── Raw kernels ──────────────────────────────────────────────────────
// Flat-slice routines used by both the plain tensor ops and the tape.

/// C += A(m×k) · B(k×n), accumulating into `out`.
pub(crate) fn matmul_acc<F: Real>(a: &[F], b: &[F], out: &mut [F], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == F::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += aip * brow[j];
            }
        }
    }
}

pub(crate) fn transpose_into<F: Real>(a: &[F], out: &mut [F], rows: usize, cols: usize) {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(out.len(), rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
}

/// Numerically stable softmax over a flat slice.
pub(crate) fn softmax_into<F: Real>(x: &[F], out: &mut [F]) {
    debug_assert!(!x.is_empty());
    let mut max = x[0];
    for &v in &x[1..] {
        if v > max {
            max = v;
        }
    }
    let mut sum = F::zero();
    for (o, &v) in out.iter_mut().zip(x.iter()) {
        let e = (v - max).exp();
        *o = e;
        sum += e;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// log(sum(exp(x))) with max-subtraction.
pub(crate) fn log_sum_exp<F: Real>(x: &[F]) -> F {
    debug_assert!(!x.is_empty());
    let mut max = x[0];
    for &v in &x[1..] {
        if v > max {
            max = v;
        }
    }
    let mut sum = F::zero();
    for &v in x {
        sum += (v - max).exp();
    }
    max + sum.ln()
}

// ── Plain (untaped) operations ───────────────────────────────────────

/// Matrix product. A 1-D left operand is treated as a row vector, a 1-D
/// right operand as a column vector.
pub fn matmul<F: Real>(a: &Tensor<F>, b: &Tensor<F>) -> Result<Tensor<F>> {
    let (m, ka) = a.as_matrix_rows().ok_or_else(|| Error::Shape {
        op: "matmul",
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    })?;
    let (kb, n) = b.as_matrix_cols().ok_or_else(|| Error::Shape {
        op: "matmul",
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    })?;
    if ka != kb {
        return Err(Error::Shape {
            op: "matmul",
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    let mut out = vec![F::zero(); m * n];
    matmul_acc(a.data(), b.data(), &mut out, m, ka, n);
    Tensor::from_vec(&[m, n], out)
}

/// Softmax over a 1-D tensor. Output is nonnegative and sums to 1.
pub fn softmax<F: Real>(v: &Tensor<F>) -> Result<Tensor<F>> {
    if v.numel() == 0 {
        return Err(Error::Invalid("softmax of empty tensor".into()));
    }
    let mut out = vec![F::zero(); v.numel()];
    softmax_into(v.data(), &mut out);
    Ok(Tensor::vector(out))
}

/// −log softmax(logits)[label], computed via log-sum-exp.
pub fn cross_entropy<F: Real>(logits: &Tensor<F>, label: usize) -> Result<F> {
    let c = logits.numel();
    if label >= c {
        return Err(Error::Invalid(format!(
            "label {} out of range for {} classes",
            label, c
        )));
    }
    let lse = log_sum_exp(logits.data());
    let loss = lse - logits.data()[label];
    // Non-negative up to rounding; clamp the last ulp of noise.
    Ok(if loss < F::zero() { F::zero() } else { loss })
}
