//! Test problems: 3-D Poisson, convection–diffusion, a 2-D finite-difference operator
//! and seeded random instances. Every instance uses a known exact solution.

use alloc::{format, string::String, vec, vec::Vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::operator::{LinearOperator, SylvesterOperator};
use crate::tensor::{DenseTensor, Shape};

/// `(1/h²) · tridiag(−1, 2, −1)` of size `p × p`.
pub fn poisson_matrix(p: usize, h: f64) -> Result<DenseMatrix> {
    if p == 0 || !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidProblem(format!("poisson_matrix needs p ≥ 1 and h > 0, got p={p}, h={h}")));
    }
    let s = 1.0 / (h * h);
    Ok(DenseMatrix::from_fn(p, p, |i, j| match i.abs_diff(j) {
        0 => 2.0 * s,
        1 => -s,
        _ => 0.0,
    }))
}

/// `(v/h²) · tridiag(−1, 2, −1) + (c/4h) · S` with `h = 1/(p+1)`, where `S` has 3 on the
/// diagonal, 1 below it, −5 above it and 1 on the second superdiagonal.
pub fn convection_diffusion_matrix(p: usize, v: f64, c: f64) -> Result<DenseMatrix> {
    if p < 4 {
        return Err(Error::InvalidProblem(format!("convection_diffusion_matrix needs p ≥ 4, got {p}")));
    }
    if !v.is_finite() || !c.is_finite() {
        return Err(Error::InvalidProblem(format!("non-finite coefficients v={v}, c={c}")));
    }
    let h = 1.0 / (p as f64 + 1.0);
    let diffusion = poisson_matrix(p, h)?;
    let k = c / (4.0 * h);
    Ok(DenseMatrix::from_fn(p, p, |i, j| {
        let stencil = if i == j {
            3.0
        } else if i == j + 1 {
            1.0
        } else if j == i + 1 {
            -5.0
        } else if j == i + 2 {
            1.0
        } else {
            0.0
        };
        v * diffusion[(i, j)] + k * stencil
    }))
}

/// Centered-difference discretization of `−Δu + e^{xy} u_x + sin(xy) u_y + (y² − x²) u`
/// on the unit square with homogeneous Dirichlet data and `n0` interior nodes per side.
///
/// Unknowns are ordered `k = i + j·n0` (x fastest), nodes sit at `((i+1)h, (j+1)h)`
/// with `h = 1/(n0+1)`.
pub fn fdm2d_matrix(n0: usize) -> Result<DenseMatrix> {
    fdm2d_with(n0, |x, y| (libm::exp(x * y), libm::sin(x * y), y * y - x * x))
}

/// The same stencil with caller-supplied `(fx, fy, reaction)` coefficient functions.
pub fn fdm2d_with(n0: usize, coeffs: impl Fn(f64, f64) -> (f64, f64, f64)) -> Result<DenseMatrix> {
    if n0 == 0 {
        return Err(Error::InvalidProblem("fdm2d_matrix needs n0 ≥ 1".into()));
    }
    let h = 1.0 / (n0 as f64 + 1.0);
    let lap = 1.0 / (h * h);
    let n = n0 * n0;
    let mut a = DenseMatrix::zeros(n, n);
    for j in 0..n0 {
        for i in 0..n0 {
            let k = i + j * n0;
            let (x, y) = ((i + 1) as f64 * h, (j + 1) as f64 * h);
            let (fx, fy, react) = coeffs(x, y);
            a[(k, k)] = 4.0 * lap + react;
            if i > 0 {
                a[(k, k - 1)] = -lap - fx / (2.0 * h);
            }
            if i + 1 < n0 {
                a[(k, k + 1)] = -lap + fx / (2.0 * h);
            }
            if j > 0 {
                a[(k, k - n0)] = -lap - fy / (2.0 * h);
            }
            if j + 1 < n0 {
                a[(k, k + n0)] = -lap + fy / (2.0 * h);
            }
        }
    }
    Ok(a)
}

/// A consistent system `L(X*) = D` with its exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub op: SylvesterOperator,
    pub rhs: DenseTensor,
    pub exact: DenseTensor,
    pub label: String,
}

impl ProblemInstance {
    /// Builds `rhs = L(exact)`.
    pub fn from_exact(op: SylvesterOperator, exact: DenseTensor, label: impl Into<String>) -> Result<Self> {
        let rhs = op.apply(&exact)?;
        Ok(Self { op, rhs, exact, label: label.into() })
    }

    /// The zero initial guess.
    pub fn zero_guess(&self) -> DenseTensor {
        DenseTensor::zeros(self.op.shape().clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Example {
    /// `d` copies of the Poisson matrix of size `p` with mesh width `h`.
    Poisson { d: usize, p: usize, h: f64 },
    /// One convection–diffusion factor per entry of `c`, all sharing `p` and `v`.
    ConvectionDiffusion { p: usize, v: f64, c: Vec<f64> },
    /// One 2-D finite-difference factor per entry of `n0`.
    Fdm2d { n0: Vec<usize> },
}

impl Example {
    pub fn poisson3d() -> Self {
        Example::Poisson { d: 3, p: 10, h: 1.0 / 11.0 }
    }

    pub fn convection_diffusion(v: f64, c: [f64; 3]) -> Self {
        Example::ConvectionDiffusion { p: 10, v, c: c.to_vec() }
    }

    pub fn fdm2d() -> Self {
        Example::Fdm2d { n0: vec![2, 3, 4] }
    }

    pub fn label(&self) -> String {
        match self {
            Example::Poisson { d, p, .. } => format!("poisson{d}d_p{p}"),
            Example::ConvectionDiffusion { v, c, .. } => {
                let cs: Vec<String> = c.iter().map(|x| format!("{x}")).collect();
                format!("convdiff_v{v}_c{}", cs.join("-"))
            }
            Example::Fdm2d { n0 } => {
                let ns: Vec<String> = n0.iter().map(|n| format!("{}", n * n)).collect();
                format!("fdm2d_{}", ns.join("x"))
            }
        }
    }

    pub fn factors(&self) -> Result<Vec<DenseMatrix>> {
        match self {
            Example::Poisson { d, p, h } => {
                if *d == 0 {
                    return Err(Error::InvalidProblem("Poisson example needs d ≥ 1".into()));
                }
                let a = poisson_matrix(*p, *h)?;
                Ok(vec![a; *d])
            }
            Example::ConvectionDiffusion { p, v, c } => {
                if c.is_empty() {
                    return Err(Error::InvalidProblem("convection-diffusion example needs at least one c".into()));
                }
                c.iter().map(|ci| convection_diffusion_matrix(*p, *v, *ci)).collect()
            }
            Example::Fdm2d { n0 } => {
                if n0.is_empty() {
                    return Err(Error::InvalidProblem("FDM example needs at least one factor".into()));
                }
                n0.iter().map(|n| fdm2d_matrix(*n)).collect()
            }
        }
    }
}

/// The example operator with the all-ones tensor as exact solution.
pub fn build_example(example: &Example) -> Result<ProblemInstance> {
    let op = SylvesterOperator::new(example.factors()?)?;
    let exact = DenseTensor::ones(op.shape().clone());
    ProblemInstance::from_exact(op, exact, example.label())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// Strictly diagonally dominant factors with positive diagonal.
    WellPosed,
    /// Entries uniform in `[−1, 1]`, no shift.
    Raw,
}

/// Largest `M` accepted by [`random_consistent_instance`].
pub const RANDOM_INSTANCE_LIMIT: usize = 4096;

/// Seeded random factors and exact solution; `rhs = L(exact)`.
///
/// Draws come from ChaCha8 in a fixed order (factors mode by mode, column-major, then
/// the exact tensor), so a seed fully determines the instance on every platform.
pub fn random_consistent_instance(shape: &Shape, seed: u64, conditioning: Conditioning) -> Result<ProblemInstance> {
    if shape.numel() > RANDOM_INSTANCE_LIMIT {
        return Err(Error::TooLarge { size: shape.numel(), limit: RANDOM_INSTANCE_LIMIT });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = Vec::with_capacity(shape.order());
    for &n in shape.dims() {
        let mut a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
        if conditioning == Conditioning::WellPosed {
            for i in 0..n {
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| libm::fabs(a[(i, j)])).sum();
                a[(i, i)] = off + 1.0 + rng.gen_range(0.0..1.0);
            }
        }
        factors.push(a);
    }
    let op = SylvesterOperator::new(factors)?;
    let exact = DenseTensor::from_fn(shape.clone(), |_| rng.gen_range(-1.0..=1.0));
    let tag = match conditioning {
        Conditioning::WellPosed => "wellposed",
        Conditioning::Raw => "raw",
    };
    ProblemInstance::from_exact(op, exact, format!("random_{shape}_{tag}_s{seed}"))
}
