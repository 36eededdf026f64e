//! Dense vector and matrix primitives, normalization and cosine kernels with
//! analytic gradients, and a central-difference gradient oracle.
//!
//! All scalars are `f64`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};

/// Norms at or below this are treated as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Tolerance on the unit-norm invariant of [`EmbeddingVector`].
pub const UNIT_NORM_TOL: f64 = 1e-6;

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteValue(format!("{what} contains NaN or Inf")))
    }
}

/// A non-empty vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ShapeMismatch("vector must have length >= 1".into()));
        }
        check_finite(&values, "vector")?;
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len.max(1)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(format!(
                "matrix dims must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} elements, got {}",
                rows * cols,
                data.len()
            )));
        }
        check_finite(&data, "matrix")?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Column `c` as an owned vector.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// `self · x` for a vector of length `cols`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| dot(row, x))
            .collect())
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.cols, |i, j| {
            (0..self.rows).map(|r| self.get(r, i) * self.get(r, j)).sum()
        })
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        Ok(Matrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum()
        }))
    }
}

/// A unit-norm embedding (`‖e‖ = 1` within [`UNIT_NORM_TOL`]).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Wraps an already-normalized vector, checking the invariant.
    pub fn from_unit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ShapeMismatch("embedding must have dim >= 1".into()));
        }
        check_finite(&values, "embedding")?;
        let n = norm(&values);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::ShapeMismatch(format!(
                "embedding norm {n} is not 1 within {UNIT_NORM_TOL}"
            )));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for EmbeddingVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// Returns `v / ‖v‖` and `‖v‖`.
pub fn l2_normalize(v: &[f64]) -> Result<(EmbeddingVector, f64)> {
    if v.is_empty() {
        return Err(Error::ShapeMismatch("cannot normalize an empty vector".into()));
    }
    let n = norm(v);
    if !n.is_finite() {
        return Err(Error::NonFiniteValue("norm".into()));
    }
    if n <= DEGENERATE_NORM {
        return Err(Error::DegenerateNorm(n));
    }
    Ok((EmbeddingVector(v.iter().map(|x| x / n).collect()), n))
}

/// Gradient of `l2_normalize` with respect to its input:
/// `(I/‖v‖ − v vᵀ/‖v‖³) · upstream`.
pub fn l2_normalize_backward(v: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
    if v.len() != upstream.len() {
        return Err(Error::DimMismatch {
            expected: v.len(),
            found: upstream.len(),
        });
    }
    let n = norm(v);
    if n <= DEGENERATE_NORM {
        return Err(Error::DegenerateNorm(n));
    }
    let radial = dot(v, upstream) / (n * n * n);
    Ok(v
        .iter()
        .zip(upstream)
        .map(|(vi, ui)| ui / n - vi * radial)
        .collect())
}

/// Cosine similarity of two unit embeddings, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(dot(a, b).clamp(-1.0, 1.0))
}

/// Central-difference gradient of `f` at `point`.
pub fn numerical_gradient(
    f: impl Fn(&[f64]) -> f64,
    point: &[f64],
    step: f64,
) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::ConfigInvalid(format!("step must be positive, got {step}")));
    }
    let mut x = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let orig = x[i];
        x[i] = orig + step;
        let fp = f(&x);
        x[i] = orig - step;
        let fm = f(&x);
        x[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFiniteValue(format!(
                "objective near coordinate {i}"
            )));
        }
        grad.push((fp - fm) / (2.0 * step));
    }
    Ok(grad)
}

/// Largest absolute deviation between `analytic_grad` and the central
/// difference of `f` at `point`.
pub fn finite_difference_check(
    f: impl Fn(&[f64]) -> f64,
    analytic_grad: &[f64],
    point: &[f64],
    step: f64,
) -> Result<f64> {
    if analytic_grad.len() != point.len() {
        return Err(Error::DimMismatch {
            expected: point.len(),
            found: analytic_grad.len(),
        });
    }
    let numeric = numerical_gradient(f, point, step)?;
    Ok(numeric
        .iter()
        .zip(analytic_grad)
        .map(|(n, a)| (n - a).abs())
        .fold(0.0, f64::max))
}

/// `|a − b| / max(1, |a|, |b|)`: relative for large magnitudes, absolute
/// below one.
#[inline]
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Max of [`relative_error`] over paired coordinates.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| relative_error(*x, *y))
        .fold(0.0, f64::max)
}
