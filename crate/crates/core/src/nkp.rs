//! Nearest-Kronecker-product preconditioning.
//!
//! The Kronecker matrix `A` of a Sylvester operator is approximated by
//! `Q₁ ⊗ … ⊗ Q_N` with `Q_k = a_{k1} A_{N+1−k} + a_{k2} E`, the parameters chosen to
//! minimize `‖A − Q₁ ⊗ … ⊗ Q_N‖_F`. With 0-based modes, `Q_k` acts on mode `N − k`.

use alloc::{format, vec::Vec};

use crate::error::{shape_err, Error, Result};
use crate::matrix::{DenseMatrix, LuFactors};
use crate::nelder_mead::{nelder_mead, NelderMeadConfig};
use crate::operator::{LinearOperator, SylvesterOperator};
use crate::solvers::{solve_tbicor, solve_tcors, solve_tlb, SolveConfig, SolveReport};
use crate::tensor::{DenseTensor, Shape};

/// Pivot guard used when factorizing the `Q_k`.
pub const PRECONDITIONER_PIVOT_TOL: f64 = 1e-13;

/// Row `k` holds `(a_{k+1,1}, a_{k+1,2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct NkpParams {
    pub a: Vec<[f64; 2]>,
}

impl NkpParams {
    /// `Q_k = E` for every `k`.
    pub fn identity(order: usize) -> Self {
        Self { a: alloc::vec![[0.0, 1.0]; order] }
    }

    /// `a_{k1} = 1`, `a_{k2} = (N−1)/N` times the mean diagonal of the paired factor.
    pub fn initial_guess(op: &SylvesterOperator) -> Self {
        let n = op.order();
        let spread = (n as f64 - 1.0) / n as f64;
        let a = (0..n)
            .map(|k| {
                let factor = &op.factors()[n - 1 - k];
                [1.0, spread * factor.trace() / factor.rows() as f64]
            })
            .collect();
        Self { a }
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.a.iter().flat_map(|r| r.iter().copied()).collect()
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.is_empty() || !flat.len().is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("expected 2N parameters, got {}", flat.len())));
        }
        Ok(Self { a: flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect() })
    }

    fn check(&self, op: &SylvesterOperator) -> Result<()> {
        if self.order() != op.order() {
            return Err(shape_err(
                "NkpParams",
                format!("{} parameter rows for an order-{} operator", self.order(), op.order()),
            ));
        }
        if self.a.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("NKP parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Per-mode scalars from which the objective is assembled.
struct FactorMoments {
    dim: f64,
    trace: f64,
    norm_sq: f64,
}

impl FactorMoments {
    fn of(a: &DenseMatrix) -> Self {
        Self { dim: a.rows() as f64, trace: a.trace(), norm_sq: a.frobenius_inner(a).unwrap_or(0.0) }
    }
}

/// `‖A − Q₁ ⊗ … ⊗ Q_N‖_F²` without forming any Kronecker product.
///
/// Uses `⟨B₁ ⊗ … ⊗ B_N, C₁ ⊗ … ⊗ C_N⟩_F = ∏ ⟨Bᵢ, Cᵢ⟩_F` on every term of the Kronecker
/// sum. Rounding can leave a tiny negative value; the result is clamped at zero.
pub fn nkp_objective(params: &NkpParams, op: &SylvesterOperator) -> Result<f64> {
    params.check(op)?;
    let moments: Vec<FactorMoments> = op.factors().iter().map(FactorMoments::of).collect();
    Ok(objective_from_moments(&params.to_flat(), &moments))
}

fn objective_from_moments(flat: &[f64], moments: &[FactorMoments]) -> f64 {
    let n = moments.len();
    // Terms of A: term m has A_m in mode m and E elsewhere.
    let mut a_sq = 0.0;
    for m in 0..n {
        for l in 0..n {
            let mut prod = 1.0;
            for (mode, mo) in moments.iter().enumerate() {
                prod *= match (mode == m, mode == l) {
                    (true, true) => mo.norm_sq,
                    (true, false) | (false, true) => mo.trace,
                    (false, false) => mo.dim,
                };
            }
            a_sq += prod;
        }
    }
    // Q acting on mode `mode` is row N−1−mode of the parameters.
    let q = |mode: usize| (flat[2 * (n - 1 - mode)], flat[2 * (n - 1 - mode) + 1]);
    let mut cross = 0.0;
    for m in 0..n {
        let mut prod = 1.0;
        for (mode, mo) in moments.iter().enumerate() {
            let (a, b) = q(mode);
            prod *= if mode == m { a * mo.norm_sq + b * mo.trace } else { a * mo.trace + b * mo.dim };
        }
        cross += prod;
    }
    let mut k_sq = 1.0;
    for (mode, mo) in moments.iter().enumerate() {
        let (a, b) = q(mode);
        k_sq *= a * a * mo.norm_sq + 2.0 * a * b * mo.trace + b * b * mo.dim;
    }
    let value = a_sq - 2.0 * cross + k_sq;
    if value.is_nan() {
        f64::INFINITY
    } else {
        value.max(0.0)
    }
}

/// Fitted (or supplied) `Q₁ … Q_N` with cached factorizations.
#[derive(Debug, Clone)]
pub struct NkpPreconditioner {
    params: NkpParams,
    q: Vec<DenseMatrix>,
    lu: Vec<LuFactors>,
    objective_value: f64,
    initial_objective: f64,
    evals: usize,
    warning: bool,
}

impl NkpPreconditioner {
    /// Forms and factorizes the `Q_k` for given parameters.
    pub fn from_params(op: &SylvesterOperator, params: NkpParams) -> Result<Self> {
        let objective_value = nkp_objective(&params, op)?;
        let n = op.order();
        let mut q = Vec::with_capacity(n);
        let mut lu = Vec::with_capacity(n);
        for (k, [a1, a2]) in params.a.iter().enumerate() {
            let factor = &op.factors()[n - 1 - k];
            let qk = factor.lincomb(*a1, &DenseMatrix::identity(factor.rows()), *a2)?;
            let f = LuFactors::factor(&qk, PRECONDITIONER_PIVOT_TOL)
                .map_err(|_| Error::SingularPreconditioner { index: k + 1 })?;
            q.push(qk);
            lu.push(f);
        }
        Ok(Self { params, q, lu, objective_value, initial_objective: objective_value, evals: 0, warning: false })
    }

    /// All `Q_k = E`, which turns the preconditioned system back into the original one.
    pub fn identity(op: &SylvesterOperator) -> Result<Self> {
        Self::from_params(op, NkpParams::identity(op.order()))
    }

    pub fn params(&self) -> &NkpParams {
        &self.params
    }

    /// `Q₁ … Q_N` in order; `Q_k` (index `k−1`) acts on mode `N − k`.
    pub fn q(&self) -> &[DenseMatrix] {
        &self.q
    }

    pub fn order(&self) -> usize {
        self.q.len()
    }

    pub fn objective_value(&self) -> f64 {
        self.objective_value
    }

    /// Objective at the starting point of the fit.
    pub fn initial_objective(&self) -> f64 {
        self.initial_objective
    }

    pub fn evaluations(&self) -> usize {
        self.evals
    }

    /// Set when the optimizer ran out of budget before meeting its tolerances.
    pub fn warning(&self) -> bool {
        self.warning
    }

    fn check_shape(&self, x: &DenseTensor, context: &'static str) -> Result<()> {
        let n = self.order();
        let ok = x.order() == n && (0..n).all(|mode| x.shape().dim(mode) == self.q[n - 1 - mode].rows());
        if ok {
            Ok(())
        } else {
            Err(shape_err(context, format!("preconditioner of order {n} applied to {}", x.shape())))
        }
    }

    /// `X ×₁ Q_N⁻¹ ×₂ … ×_N Q₁⁻¹`, or the same with `Q⁻ᵀ` when `transpose` is set.
    pub fn apply_inverse(&self, x: &DenseTensor, transpose: bool) -> Result<DenseTensor> {
        self.check_shape(x, "NkpPreconditioner::apply_inverse")?;
        let n = self.order();
        let mut out = x.clone();
        for mode in 0..n {
            out = out.mode_solve(&self.lu[n - 1 - mode], mode, transpose)?;
        }
        Ok(out)
    }

    /// `D̃ = D ×₁ Q_N⁻¹ ×₂ … ×_N Q₁⁻¹`.
    pub fn precondition_rhs(&self, d: &DenseTensor) -> Result<DenseTensor> {
        self.apply_inverse(d, false)
    }
}

/// Fits the preconditioner by simplex search from [`NkpParams::initial_guess`].
pub fn fit_nkp(op: &SylvesterOperator, optcfg: &NelderMeadConfig) -> Result<NkpPreconditioner> {
    fit_nkp_from(op, NkpParams::initial_guess(op), optcfg)
}

pub fn fit_nkp_from(op: &SylvesterOperator, start: NkpParams, optcfg: &NelderMeadConfig) -> Result<NkpPreconditioner> {
    start.check(op)?;
    if op.factors().iter().any(|a| a.as_slice().iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidProblem("operator factors must be finite".into()));
    }
    let moments: Vec<FactorMoments> = op.factors().iter().map(FactorMoments::of).collect();
    let x0 = start.to_flat();
    let initial_objective = objective_from_moments(&x0, &moments);
    let res = nelder_mead(|x| objective_from_moments(x, &moments), &x0, optcfg)?;
    let mut pre = NkpPreconditioner::from_params(op, NkpParams::from_flat(&res.x)?)?;
    pre.initial_objective = initial_objective;
    pre.evals = res.evals;
    pre.warning = !res.converged;
    Ok(pre)
}

/// `L̃(X) = L(X) ×₁ Q_N⁻¹ ×₂ … ×_N Q₁⁻¹` and its adjoint.
#[derive(Debug, Clone, Copy)]
pub struct PreconditionedOperator<'a> {
    base: &'a SylvesterOperator,
    pre: &'a NkpPreconditioner,
}

impl<'a> PreconditionedOperator<'a> {
    pub fn new(base: &'a SylvesterOperator, pre: &'a NkpPreconditioner) -> Result<Self> {
        let probe = DenseTensor::zeros(base.shape().clone());
        pre.check_shape(&probe, "PreconditionedOperator::new")?;
        Ok(Self { base, pre })
    }

    pub fn base(&self) -> &SylvesterOperator {
        self.base
    }

    pub fn preconditioner(&self) -> &NkpPreconditioner {
        self.pre
    }
}

impl LinearOperator for PreconditionedOperator<'_> {
    fn shape(&self) -> &Shape {
        self.base.shape()
    }

    fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        self.pre.apply_inverse(&self.base.apply(x)?, false)
    }

    fn apply_transpose(&self, x: &DenseTensor) -> Result<DenseTensor> {
        self.base.apply_transpose(&self.pre.apply_inverse(x, true)?)
    }
}

/// Which base iteration a preconditioned solve runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseSolver {
    Tlb,
    Tbicor,
    Tcors,
}

/// Runs `solver` on `L̃(X) = D̃` with a given preconditioner.
///
/// The stopping rule is evaluated as configured; with `RelErrorVsExact` it measures the
/// original solution, which both systems share.
pub fn solve_preconditioned_with(
    solver: BaseSolver,
    op: &SylvesterOperator,
    pre: &NkpPreconditioner,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    op.check_input(d, "preconditioned solve: right-hand side")?;
    let pop = PreconditionedOperator::new(op, pre)?;
    let dt = pre.precondition_rhs(d)?;
    match solver {
        BaseSolver::Tlb => solve_tlb(&pop, &dt, x0, cfg),
        BaseSolver::Tbicor => solve_tbicor(&pop, &dt, x0, cfg),
        BaseSolver::Tcors => solve_tcors(&pop, &dt, x0, cfg),
    }
}

pub fn solve_ptlb(
    op: &SylvesterOperator,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
    optcfg: &NelderMeadConfig,
) -> Result<SolveReport> {
    solve_preconditioned_with(BaseSolver::Tlb, op, &fit_nkp(op, optcfg)?, d, x0, cfg)
}

pub fn solve_ptbicor(
    op: &SylvesterOperator,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
    optcfg: &NelderMeadConfig,
) -> Result<SolveReport> {
    solve_preconditioned_with(BaseSolver::Tbicor, op, &fit_nkp(op, optcfg)?, d, x0, cfg)
}

pub fn solve_ptcors(
    op: &SylvesterOperator,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
    optcfg: &NelderMeadConfig,
) -> Result<SolveReport> {
    solve_preconditioned_with(BaseSolver::Tcors, op, &fit_nkp(op, optcfg)?, d, x0, cfg)
}
