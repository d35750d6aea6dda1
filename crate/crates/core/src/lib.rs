//! Dense tensors, Sylvester tensor operators and Lanczos-type Krylov solvers for
//! `X ×₁ A₁ + … + X ×_N A_N = D`, with a nearest-Kronecker-product preconditioner.
//!
//! Tensors are stored column-major (first index fastest) and modes are 0-based.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod gallery;
pub mod lanczos;
pub mod matrix;
pub mod nelder_mead;
pub mod nkp;
pub mod operator;
pub mod solvers;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, LuFactors};
pub use operator::{LinearOperator, SylvesterOperator};
pub use solvers::{
    solve_tbicor, solve_tcors, solve_tlb, BreakdownKind, SolveConfig, SolveReport, SolveStatus, StoppingRule,
};
pub use tensor::{DenseTensor, Shape};
