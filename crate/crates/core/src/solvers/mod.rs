//! Krylov solvers for `L(X) = D`: TLB, TBiCOR and TCORS.
//!
//! Each solver is generic over [`LinearOperator`], so the preconditioned variants in
//! [`crate::nkp`] run the same bodies on the preconditioned operator.

mod bicor;
mod cors;
mod tlb;

pub use bicor::{solve_tbicor, solve_tbicor_monitored, BicorState};
pub use cors::{solve_tcors, solve_tcors_monitored, TcorsState};
pub use tlb::{solve_tlb, solve_tlb_monitored, TlbStep};

use alloc::{format, vec::Vec};
use core::fmt;

use crate::error::{shape_err, Error, Result};
use crate::lanczos::{DEFAULT_BREAKDOWN_TOL, DEFAULT_PIVOT_TOL};
use crate::operator::LinearOperator;
use crate::tensor::{DenseTensor, Shape};

#[derive(Debug, Clone, PartialEq)]
pub enum StoppingRule {
    /// `‖X_k − X*‖ / ‖X*‖` against a known solution.
    RelErrorVsExact(DenseTensor),
    /// `‖R_k‖ / ‖D‖` with the solver's own residual.
    RelResidual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub tol: f64,
    /// `None` means `10 · M`.
    pub max_iters: Option<usize>,
    pub stopping_rule: StoppingRule,
    /// Scale factor for the near-zero tests on the recurrence denominators.
    pub breakdown_tol: f64,
    /// Relative pivot guard for the tridiagonal LU used by TLB.
    pub pivot_tol: f64,
    pub record_history: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: None,
            stopping_rule: StoppingRule::RelResidual,
            breakdown_tol: DEFAULT_BREAKDOWN_TOL,
            pivot_tol: DEFAULT_PIVOT_TOL,
            record_history: true,
        }
    }
}

impl SolveConfig {
    pub fn with_exact(mut self, exact: DenseTensor) -> Self {
        self.stopping_rule = StoppingRule::RelErrorVsExact(exact);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = Some(max_iters);
        self
    }

    pub fn iteration_limit(&self, shape: &Shape) -> usize {
        self.max_iters.unwrap_or_else(|| 10 * shape.numel())
    }

    pub fn validate(&self, shape: &Shape) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == Some(0) {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.breakdown_tol >= 0.0) || !(self.pivot_tol >= 0.0) {
            return Err(Error::InvalidConfig("breakdown and pivot tolerances must be non-negative".into()));
        }
        if let StoppingRule::RelErrorVsExact(exact) = &self.stopping_rule {
            if exact.shape() != shape {
                return Err(shape_err("SolveConfig", format!("exact solution {} vs {}", exact.shape(), shape)));
            }
            if exact.norm() == 0.0 {
                return Err(Error::InvalidConfig("exact solution has zero norm".into()));
            }
        }
        Ok(())
    }
}

/// Which denominator of which recurrence vanished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownKind {
    /// `⟨W̄, L(V̄)⟩ = 0` in the Lanczos recurrence before convergence.
    Lanczos,
    /// A zero pivot in the LU of `T_m`.
    TridiagonalPivot,
    /// `⟨R*_n, L(R_n)⟩ = 0` in TBiCOR.
    BicorResidual,
    /// `⟨L(P_n), Lᵀ(P*_n)⟩ = 0` in TBiCOR.
    BicorDirection,
    /// `ρ = ⟨R₀*, L(U)⟩ = 0` in TCORS. The prescribed remedy is to restart from a
    /// different initial tensor.
    CorsResetInitialGuess,
    /// `⟨R₀*, L(Q)⟩ = 0` in TCORS.
    CorsDirection,
}

impl fmt::Display for BreakdownKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BreakdownKind::Lanczos => "lanczos",
            BreakdownKind::TridiagonalPivot => "tridiagonal_pivot",
            BreakdownKind::BicorResidual => "bicor_residual",
            BreakdownKind::BicorDirection => "bicor_direction",
            BreakdownKind::CorsResetInitialGuess => "cors_reset_initial_guess",
            BreakdownKind::CorsDirection => "cors_direction",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Breakdown { kind: BreakdownKind, step: usize },
}

impl SolveStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, SolveStatus::Converged)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatus::Converged => f.write_str("converged"),
            SolveStatus::MaxIters => f.write_str("max_iters"),
            SolveStatus::Breakdown { kind, step } => write!(f, "breakdown:{kind}@{step}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    /// Present when the stopping rule carries the exact solution.
    pub rel_error: Option<f64>,
    pub rel_residual: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: DenseTensor,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Value of the stopping metric at the last iterate.
    pub final_metric: f64,
    /// One entry per iterate, starting with `X₀`; empty when history is disabled.
    pub history: Vec<HistoryEntry>,
}

/// Hooks called by the solvers. Every method has a no-op default.
pub trait SolveMonitor {
    /// Milliseconds since the solve started; recorded in the history.
    fn elapsed_ms(&self) -> f64 {
        0.0
    }

    fn on_iterate(&mut self, _iteration: usize, _x: &DenseTensor) {}

    fn on_bicor(&mut self, _iteration: usize, _state: &BicorState) {}

    fn on_tcors(&mut self, _iteration: usize, _state: &TcorsState) {}

    fn on_tlb(&mut self, _step: &TlbStep<'_>) {}
}

/// The monitor used by the plain entry points.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoMonitor;

impl SolveMonitor for NoMonitor {}

/// `‖X_k − X*‖/‖X*‖` or `‖R_k‖/‖D‖`, depending on the rule.
pub fn stopping_metric(cfg: &SolveConfig, xk: &DenseTensor, rk: &DenseTensor, d: &DenseTensor) -> Result<f64> {
    match &cfg.stopping_rule {
        StoppingRule::RelErrorVsExact(exact) => {
            let denom = exact.norm();
            if denom == 0.0 {
                return Err(Error::InvalidConfig("exact solution has zero norm".into()));
            }
            Ok(DenseTensor::lincomb(1.0, xk, -1.0, exact)?.norm() / denom)
        }
        StoppingRule::RelResidual => {
            let denom = d.norm();
            if denom == 0.0 {
                return Err(Error::InvalidConfig("right-hand side has zero norm".into()));
            }
            Ok(rk.norm() / denom)
        }
    }
}

/// Shared bookkeeping: history, metric evaluation, convergence test.
pub(crate) struct Tracker<'a> {
    cfg: &'a SolveConfig,
    d_norm: f64,
    exact_norm: f64,
    history: Vec<HistoryEntry>,
    last_metric: f64,
}

impl<'a> Tracker<'a> {
    pub(crate) fn new<O: LinearOperator + ?Sized>(
        op: &O,
        d: &DenseTensor,
        x0: &DenseTensor,
        cfg: &'a SolveConfig,
    ) -> Result<Self> {
        op.check_input(d, "solve: right-hand side")?;
        op.check_input(x0, "solve: initial guess")?;
        cfg.validate(op.shape())?;
        let d_norm = d.norm();
        let exact_norm = match &cfg.stopping_rule {
            StoppingRule::RelErrorVsExact(exact) => exact.norm(),
            StoppingRule::RelResidual => {
                if d_norm == 0.0 {
                    return Err(Error::InvalidConfig("right-hand side has zero norm".into()));
                }
                0.0
            }
        };
        Ok(Self { cfg, d_norm, exact_norm, history: Vec::new(), last_metric: f64::INFINITY })
    }

    /// Records iterate `k` with residual norm `r_norm`; returns whether it meets the tolerance.
    pub(crate) fn record(
        &mut self,
        k: usize,
        x: &DenseTensor,
        r_norm: f64,
        monitor: &mut dyn SolveMonitor,
    ) -> Result<bool> {
        let rel_residual = if self.d_norm > 0.0 { r_norm / self.d_norm } else { r_norm };
        let rel_error = match &self.cfg.stopping_rule {
            StoppingRule::RelErrorVsExact(exact) => {
                let mut diff = x.clone();
                diff.axpy(-1.0, exact)?;
                Some(diff.norm() / self.exact_norm)
            }
            StoppingRule::RelResidual => None,
        };
        self.last_metric = rel_error.unwrap_or(rel_residual);
        monitor.on_iterate(k, x);
        if self.cfg.record_history {
            self.history.push(HistoryEntry { iteration: k, rel_error, rel_residual, elapsed_ms: monitor.elapsed_ms() });
        }
        Ok(self.last_metric < self.cfg.tol)
    }

    pub(crate) fn finish(self, solution: DenseTensor, iterations: usize, status: SolveStatus) -> SolveReport {
        SolveReport { solution, iterations, status, final_metric: self.last_metric, history: self.history }
    }
}

/// `|num| ≤ tol · scale` with a non-finite guard.
pub(crate) fn vanishes(num: f64, scale: f64, tol: f64) -> bool {
    !num.is_finite() || libm::fabs(num) <= tol * scale
}
