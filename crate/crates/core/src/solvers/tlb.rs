use alloc::vec::Vec;

use super::{BreakdownKind, NoMonitor, SolveConfig, SolveMonitor, SolveReport, SolveStatus, Tracker};
use crate::error::{Error, Result};
use crate::lanczos::{seed_pair, tridiagonal_solve, LanczosProcess, StepOutcome};
use crate::operator::LinearOperator;
use crate::tensor::DenseTensor;

/// Snapshot handed to [`SolveMonitor::on_tlb`] after step `m`.
#[derive(Debug, Clone, Copy)]
pub struct TlbStep<'a> {
    pub m: usize,
    /// `V₁ … V_m`, plus `V_{m+1}` when the recurrence did not break down.
    pub basis: &'a [DenseTensor],
    /// `V̄_{m+1}`; the residual of `X_m` is `−y_m V̄_{m+1}`.
    pub next_unnormalized: &'a DenseTensor,
    /// Solution of `T_m y = ‖R₀‖ e₁`.
    pub y: &'a [f64],
    pub iterate: &'a DenseTensor,
}

pub fn solve_tlb<O: LinearOperator + ?Sized>(
    op: &O,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    solve_tlb_monitored(op, d, x0, cfg, &mut NoMonitor)
}

/// Tensor Lanczos L-biorthogonalization solver.
///
/// Step `m` grows the basis by one tensor, solves the projected tridiagonal system and
/// rebuilds `X_m = X₀ + Σ yᵢ Vᵢ` from scratch.
pub fn solve_tlb_monitored<O: LinearOperator + ?Sized>(
    op: &O,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
    monitor: &mut dyn SolveMonitor,
) -> Result<SolveReport> {
    let mut tracker = Tracker::new(op, d, x0, cfg)?;
    let mut r0 = d.clone();
    r0.axpy(-1.0, &op.apply(x0)?)?;
    let r0_norm = r0.norm();
    if tracker.record(0, x0, r0_norm, monitor)? {
        return Ok(tracker.finish(x0.clone(), 0, SolveStatus::Converged));
    }
    let lanczos_stop = SolveStatus::Breakdown { kind: BreakdownKind::Lanczos, step: 0 };
    let (v1, w1) = match seed_pair(op, &r0, cfg.breakdown_tol) {
        Ok(pair) => pair,
        Err(Error::ZeroResidual | Error::DegenerateSeed) => return Ok(tracker.finish(x0.clone(), 0, lanczos_stop)),
        Err(e) => return Err(e),
    };
    let mut process = LanczosProcess::new(op, v1, w1, cfg.breakdown_tol)?;
    let limit = cfg.iteration_limit(op.shape());
    let mut x = x0.clone();

    for m in 1..=limit {
        let outcome = process.step()?;
        let mut rhs = Vec::with_capacity(m);
        rhs.push(r0_norm);
        rhs.resize(m, 0.0);
        let y = match tridiagonal_solve(process.tridiagonal(), &rhs, cfg.pivot_tol) {
            Ok(y) => y,
            Err(Error::SingularPivot { .. }) => {
                let status = SolveStatus::Breakdown { kind: BreakdownKind::TridiagonalPivot, step: m };
                return Ok(tracker.finish(x, m - 1, status));
            }
            Err(e) => return Err(e),
        };
        x = x0.clone();
        for (yi, vi) in y.iter().zip(process.basis()) {
            x.axpy(*yi, vi)?;
        }
        let r_norm = libm::fabs(y[m - 1]) * process.next_unnormalized().norm();
        let converged = tracker.record(m, &x, r_norm, monitor)?;
        monitor.on_tlb(&TlbStep {
            m,
            basis: process.basis(),
            next_unnormalized: process.next_unnormalized(),
            y: &y,
            iterate: &x,
        });
        if converged {
            return Ok(tracker.finish(x, m, SolveStatus::Converged));
        }
        if outcome == StepOutcome::Breakdown {
            let status = SolveStatus::Breakdown { kind: BreakdownKind::Lanczos, step: m };
            return Ok(tracker.finish(x, m, status));
        }
    }
    Ok(tracker.finish(x, limit, SolveStatus::MaxIters))
}
