//! The Sylvester operator `L(X) = X ×₁ A₁ + … + X ×_N A_N` and its adjoint.

use alloc::{format, vec::Vec};

use crate::error::{shape_err, Error, Result};
use crate::matrix::DenseMatrix;
use crate::tensor::{DenseTensor, Shape};

/// Default ceiling on `M = ∏ Iₙ` for dense Kronecker assembly.
pub const DEFAULT_ASSEMBLY_LIMIT: usize = 10_000;

/// A linear map on tensors of a fixed shape together with its adjoint under `⟨·,·⟩`.
///
/// Every solver in this crate is written against this trait, so plain and
/// preconditioned operators share one iteration body.
pub trait LinearOperator {
    fn shape(&self) -> &Shape;

    fn apply(&self, x: &DenseTensor) -> Result<DenseTensor>;

    fn apply_transpose(&self, x: &DenseTensor) -> Result<DenseTensor>;

    fn check_input(&self, x: &DenseTensor, context: &'static str) -> Result<()> {
        if x.shape() != self.shape() {
            return Err(shape_err(context, format!("operator acts on {}, got {}", self.shape(), x.shape())));
        }
        Ok(())
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn shape(&self) -> &Shape {
        (**self).shape()
    }

    fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        (**self).apply(x)
    }

    fn apply_transpose(&self, x: &DenseTensor) -> Result<DenseTensor> {
        (**self).apply_transpose(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SylvesterOperator {
    factors: Vec<DenseMatrix>,
    transposed: Vec<DenseMatrix>,
    shape: Shape,
}

impl SylvesterOperator {
    /// Factor `n` must be square; its size becomes dimension `n` of the induced shape.
    pub fn new(factors: Vec<DenseMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidShape("a Sylvester operator needs at least one factor".into()));
        }
        for (n, a) in factors.iter().enumerate() {
            if !a.is_square() {
                return Err(shape_err(
                    "SylvesterOperator::new",
                    format!("factor {n} is {}x{}, expected square", a.rows(), a.cols()),
                ));
            }
        }
        let shape = Shape::new(factors.iter().map(DenseMatrix::rows).collect::<Vec<_>>())?;
        let transposed = factors.iter().map(DenseMatrix::transpose).collect();
        Ok(Self { factors, transposed, shape })
    }

    pub fn factors(&self) -> &[DenseMatrix] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// The dual operator `Lᵀ` as a Sylvester operator in its own right.
    pub fn transposed(&self) -> Self {
        Self { factors: self.transposed.clone(), transposed: self.factors.clone(), shape: self.shape.clone() }
    }

    fn sum_of_mode_products(&self, x: &DenseTensor, mats: &[DenseMatrix]) -> Result<DenseTensor> {
        let mut out = x.mode_product(&mats[0], 0)?;
        for (n, a) in mats.iter().enumerate().skip(1) {
            out.axpy(1.0, &x.mode_product(a, n)?)?;
        }
        Ok(out)
    }

    /// The `M × M` matrix `Σₙ E ⊗ … ⊗ Aₙ ⊗ … ⊗ E` (with `A₁` rightmost) that acts on
    /// `vec(X)` the way `L` acts on `X`. Refuses when `M > limit`.
    pub fn assemble_kronecker(&self, limit: usize) -> Result<DenseMatrix> {
        let m = self.shape.numel();
        if m > limit {
            return Err(Error::TooLarge { size: m, limit });
        }
        let n = self.order();
        let mut total = DenseMatrix::zeros(m, m);
        for mode in 0..n {
            // Leftmost Kronecker position holds the last mode.
            let mut term = DenseMatrix::identity(1);
            for pos_mode in (0..n).rev() {
                let block = if pos_mode == mode {
                    self.factors[mode].clone()
                } else {
                    DenseMatrix::identity(self.shape.dim(pos_mode))
                };
                term = term.kron(&block);
            }
            total = total.lincomb(1.0, &term, 1.0)?;
        }
        Ok(total)
    }
}

impl LinearOperator for SylvesterOperator {
    fn shape(&self) -> &Shape {
        &self.shape
    }

    fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        self.check_input(x, "SylvesterOperator::apply")?;
        self.sum_of_mode_products(x, &self.factors)
    }

    fn apply_transpose(&self, x: &DenseTensor) -> Result<DenseTensor> {
        self.check_input(x, "SylvesterOperator::apply_transpose")?;
        self.sum_of_mode_products(x, &self.transposed)
    }
}

/// Dense matrix of any operator, built column by column from its action on the
/// canonical basis. Test and diagnostic use only.
pub fn dense_matrix_of<O: LinearOperator + ?Sized>(op: &O, transpose: bool, limit: usize) -> Result<DenseMatrix> {
    let m = op.shape().numel();
    if m > limit {
        return Err(Error::TooLarge { size: m, limit });
    }
    let mut out = DenseMatrix::zeros(m, m);
    let mut e = DenseTensor::zeros(op.shape().clone());
    for j in 0..m {
        e.as_mut_slice()[j] = 1.0;
        let col = if transpose { op.apply_transpose(&e)? } else { op.apply(&e)? };
        out.as_mut_slice()[j * m..(j + 1) * m].copy_from_slice(col.as_slice());
        e.as_mut_slice()[j] = 0.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_identity_factor_is_identity() {
        let op = SylvesterOperator::new(alloc::vec![DenseMatrix::identity(3)]).unwrap();
        let x = DenseTensor::from_col_major(Shape::new([3]).unwrap(), alloc::vec![1.0, -2.0, 4.0]).unwrap();
        assert_eq!(op.apply(&x).unwrap(), x);
        assert_eq!(op.assemble_kronecker(DEFAULT_ASSEMBLY_LIMIT).unwrap(), DenseMatrix::identity(3));
    }

    #[test]
    fn diagonal_pair_assembles_to_diagonal_sum() {
        let a1 = DenseMatrix::diagonal(&[1.0, 2.0]);
        let a2 = DenseMatrix::diagonal(&[3.0, 4.0]);
        let op = SylvesterOperator::new(alloc::vec![a1, a2]).unwrap();
        let k = op.assemble_kronecker(DEFAULT_ASSEMBLY_LIMIT).unwrap();
        assert_eq!(k, DenseMatrix::diagonal(&[4.0, 5.0, 5.0, 6.0]));
    }

    #[test]
    fn scalar_factors() {
        let a = DenseMatrix::from_rows(&[[1.5]]).unwrap();
        let op = SylvesterOperator::new(alloc::vec![a.clone(), a]).unwrap();
        let k = op.assemble_kronecker(DEFAULT_ASSEMBLY_LIMIT).unwrap();
        assert_eq!(k.as_slice(), &[3.0]);
    }

    #[test]
    fn transpose_of_upper_triangular_picks_first_row() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [0.0, 4.0, 5.0], [0.0, 0.0, 6.0]]).unwrap();
        let op = SylvesterOperator::new(alloc::vec![a]).unwrap();
        let e1 = DenseTensor::from_col_major(Shape::new([3]).unwrap(), alloc::vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(op.apply_transpose(&e1).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn guard_refuses_large_assembly() {
        let op = SylvesterOperator::new(alloc::vec![DenseMatrix::identity(5); 3]).unwrap();
        assert!(matches!(op.assemble_kronecker(100), Err(Error::TooLarge { size: 125, limit: 100 })));
    }

    #[test]
    fn rejects_non_square_factor() {
        assert!(SylvesterOperator::new(alloc::vec![DenseMatrix::zeros(2, 3)]).is_err());
    }
}
