//! Dense N-way tensors and the multilinear primitives the solvers are built on.
//!
//! Storage is column-major: the first index varies fastest, so `vectorize` is a plain
//! copy of the buffer and `vec(X ×ₙ A)` matches the Kronecker ordering
//! `E ⊗ … ⊗ A ⊗ … ⊗ E` with `A` in position `N - n` (counting from the left, 1-based n).
//!
//! Modes are 0-based throughout the API.

use alloc::{format, vec, vec::Vec};
use core::fmt;

use crate::error::{shape_err, Error, Result};
use crate::matrix::{DenseMatrix, LuFactors};

/// Tensor dimensions `I₁ × … × I_N`.
///
/// An empty dimension list denotes an order-0 (scalar) tensor, which only arises from
/// contracting the last mode of an order-1 tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::InvalidShape("a tensor needs at least one mode".into()));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("dimension {i} is zero")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape("element count overflows usize".into()))?;
        Ok(Self(dims))
    }

    pub fn scalar() -> Self {
        Self(Vec::new())
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn dim(&self, mode: usize) -> usize {
        self.0[mode]
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Product of the dimensions before `mode` (the stride of `mode`).
    pub fn stride(&self, mode: usize) -> usize {
        self.0[..mode].iter().product()
    }

    fn with_dim(&self, mode: usize, d: usize) -> Self {
        let mut dims = self.0.clone();
        dims[mode] = d;
        Self(dims)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            Err(Error::ModeOutOfRange { mode, order: self.order() })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// A dense real tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: Shape) -> Self {
        let n = shape.numel();
        Self { shape, data: vec![0.0; n] }
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        let n = shape.numel();
        Self { shape, data: vec![value; n] }
    }

    pub fn ones(shape: Shape) -> Self {
        Self::filled(shape, 1.0)
    }

    pub fn from_col_major(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.numel() {
            return Err(shape_err("DenseTensor::from_col_major", format!("{} entries for shape {shape}", data.len())));
        }
        Ok(Self { shape, data })
    }

    /// Builds a tensor by evaluating `f` at every 0-based multi-index.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let n = shape.numel();
        let mut idx = vec![0usize; shape.order()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for (k, i) in idx.iter_mut().enumerate() {
                *i += 1;
                if *i < shape.dim(k) {
                    break;
                }
                *i = 0;
            }
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order());
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &d) in idx.iter().zip(self.shape.dims()) {
            debug_assert!(i < d);
            lin += i * stride;
            stride *= d;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let lin = self.linear_index(idx);
        self.data[lin] = v;
    }

    /// Value of an order-0 tensor.
    pub fn scalar_value(&self) -> Option<f64> {
        (self.order() == 0).then(|| self.data[0])
    }

    fn check_same_shape(&self, other: &DenseTensor, context: &'static str) -> Result<()> {
        if self.shape != other.shape {
            return Err(shape_err(context, format!("{} vs {}", self.shape, other.shape)));
        }
        Ok(())
    }

    /// Mode-`mode` unfolding: an `I_mode × (M / I_mode)` matrix whose columns are the
    /// mode fibers, earlier modes varying fastest.
    pub fn unfold(&self, mode: usize) -> Result<DenseMatrix> {
        self.shape.check_mode(mode)?;
        let rows = self.shape.dim(mode);
        let left = self.shape.stride(mode);
        let right = self.data.len() / (left * rows);
        let mut out = DenseMatrix::zeros(rows, left * right);
        let dst = out.as_mut_slice();
        for r in 0..right {
            for i in 0..rows {
                let src = &self.data[(r * rows + i) * left..(r * rows + i + 1) * left];
                for (l, &v) in src.iter().enumerate() {
                    dst[i + (l + r * left) * rows] = v;
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`unfold`](Self::unfold) for a target `shape`.
    pub fn fold(m: &DenseMatrix, mode: usize, shape: Shape) -> Result<Self> {
        shape.check_mode(mode)?;
        if m.rows() != shape.dim(mode) || m.rows() * m.cols() != shape.numel() {
            return Err(shape_err(
                "DenseTensor::fold",
                format!("{}x{} matrix into shape {shape} along mode {mode}", m.rows(), m.cols()),
            ));
        }
        let rows = m.rows();
        let left = shape.stride(mode);
        let right = shape.numel() / (left * rows);
        let mut data = vec![0.0; shape.numel()];
        let src = m.as_slice();
        for r in 0..right {
            for i in 0..rows {
                let dst = &mut data[(r * rows + i) * left..(r * rows + i + 1) * left];
                for (l, d) in dst.iter_mut().enumerate() {
                    *d = src[i + (l + r * left) * rows];
                }
            }
        }
        Ok(Self { shape, data })
    }

    /// `X ×ₙ A`: contracts mode `mode` against the column index of `a`.
    pub fn mode_product(&self, a: &DenseMatrix, mode: usize) -> Result<Self> {
        self.shape.check_mode(mode)?;
        if a.cols() != self.shape.dim(mode) {
            return Err(shape_err(
                "mode_product",
                format!(
                    "mode {mode} has dimension {} but the matrix is {}x{}",
                    self.shape.dim(mode),
                    a.rows(),
                    a.cols()
                ),
            ));
        }
        let product = a.matmul(&self.unfold(mode)?)?;
        Self::fold(&product, mode, self.shape.with_dim(mode, a.rows()))
    }

    /// `X ×ₙ Q⁻¹` (or `X ×ₙ Q⁻ᵀ`) through a cached factorization of `Q`.
    pub fn mode_solve(&self, lu: &LuFactors, mode: usize, transpose: bool) -> Result<Self> {
        self.shape.check_mode(mode)?;
        if lu.dim() != self.shape.dim(mode) {
            return Err(shape_err(
                "mode_solve",
                format!("mode {mode} has dimension {} but the factor is {}", self.shape.dim(mode), lu.dim()),
            ));
        }
        let unfolded = self.unfold(mode)?;
        let solved = if transpose { lu.solve_transpose_matrix(&unfolded) } else { lu.solve_matrix(&unfolded) };
        Self::fold(&solved, mode, self.shape.clone())
    }

    /// `X ×̄ₙ v`: contracts mode `mode` against `v`, dropping that mode.
    pub fn mode_vector_product(&self, v: &[f64], mode: usize) -> Result<Self> {
        self.shape.check_mode(mode)?;
        let len = self.shape.dim(mode);
        if v.len() != len {
            return Err(shape_err(
                "mode_vector_product",
                format!("mode {mode} has dimension {len}, vector has length {}", v.len()),
            ));
        }
        let left = self.shape.stride(mode);
        let right = self.data.len() / (left * len);
        let mut dims = self.shape.dims().to_vec();
        dims.remove(mode);
        let mut data = vec![0.0; left * right];
        for r in 0..right {
            let dst = &mut data[r * left..(r + 1) * left];
            for (i, &vi) in v.iter().enumerate() {
                let src = &self.data[(r * len + i) * left..(r * len + i + 1) * left];
                for (d, &x) in dst.iter_mut().zip(src) {
                    *d += x * vi;
                }
            }
        }
        Ok(Self { shape: Shape(dims), data })
    }

    /// Tensor inner product `⟨X, Y⟩`.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other, "inner")?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(dot(&self.data, &self.data))
    }

    /// `alpha * X + beta * Y`.
    pub fn lincomb(alpha: f64, x: &DenseTensor, beta: f64, y: &DenseTensor) -> Result<Self> {
        x.check_same_shape(y, "lincomb")?;
        let data = x.data.iter().zip(&y.data).map(|(&a, &b)| alpha * a + beta * b).collect();
        Ok(Self { shape: x.shape.clone(), data })
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: f64, x: &DenseTensor) -> Result<()> {
        self.check_same_shape(x, "axpy")?;
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Column-major flattening.
    pub fn vectorize(&self) -> Vec<f64> {
        self.data.clone()
    }

    /// The `j`-th slice along the last mode (a frontal slice for order 3).
    pub fn last_mode_slice(&self, j: usize) -> Result<Self> {
        let order = self.order();
        if order == 0 {
            return Err(Error::ModeOutOfRange { mode: 0, order: 0 });
        }
        let last = self.shape.dim(order - 1);
        if j >= last {
            return Err(shape_err("last_mode_slice", format!("slice {j} of {last}")));
        }
        let len = self.data.len() / last;
        let dims = self.shape.dims()[..order - 1].to_vec();
        Ok(Self { shape: Shape(dims), data: self.data[j * len..(j + 1) * len].to_vec() })
    }

    /// Stacks equally shaped tensors along a new trailing mode.
    pub fn stack(columns: &[DenseTensor]) -> Result<Self> {
        let first = columns.first().ok_or_else(|| Error::InvalidShape("cannot stack zero tensors".into()))?;
        let mut data = Vec::with_capacity(first.data.len() * columns.len());
        for c in columns {
            first.check_same_shape(c, "stack")?;
            data.extend_from_slice(&c.data);
        }
        let mut dims = first.shape.dims().to_vec();
        dims.push(columns.len());
        Ok(Self { shape: Shape(dims), data })
    }

    pub fn max_abs_diff(&self, other: &DenseTensor) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `X ⊠^(level) Y`.
///
/// Both tensors are viewed with `level` modes (missing trailing modes have dimension 1)
/// and must agree on the first `level - 1`. Entry `(i, j)` is the inner product of the
/// `i`-th last-mode slice of `X` with the `j`-th of `Y`. Level 1 is the vector case
/// `xᵀ y`, returned as a 1×1 matrix.
pub fn boxtimes(x: &DenseTensor, y: &DenseTensor, level: usize) -> Result<DenseMatrix> {
    if level == 0 || x.order() > level || y.order() > level {
        return Err(shape_err(
            "boxtimes",
            format!("level {level} for tensors of order {} and {}", x.order(), y.order()),
        ));
    }
    if level == 1 {
        return DenseMatrix::from_col_major(1, 1, vec![x.inner(y)?]);
    }
    let padded = |t: &DenseTensor| {
        let mut d = t.shape.dims().to_vec();
        d.resize(level, 1);
        d
    };
    let (dx, dy) = (padded(x), padded(y));
    if dx[..level - 1] != dy[..level - 1] {
        return Err(shape_err("boxtimes", format!("leading dimensions {} vs {}", x.shape, y.shape)));
    }
    let (nx, ny) = (dx[level - 1], dy[level - 1]);
    let len = x.data.len() / nx;
    Ok(DenseMatrix::from_fn(nx, ny, |i, j| dot(&x.data[i * len..(i + 1) * len], &y.data[j * len..(j + 1) * len])))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
