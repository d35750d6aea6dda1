use super::{vanishes, BreakdownKind, NoMonitor, SolveConfig, SolveMonitor, SolveReport, SolveStatus, Tracker};
use crate::error::Result;
use crate::operator::LinearOperator;
use crate::tensor::DenseTensor;

/// TCORS recurrence tensors after iteration `n`.
///
/// `u` is the residual of `X_n`; `z_hat = L(U_{n−1})`. The remaining tensors and
/// scalars are the ones computed during iteration `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TcorsState {
    pub u: DenseTensor,
    pub z_hat: DenseTensor,
    pub t_hat: DenseTensor,
    pub d_cap: DenseTensor,
    pub c: DenseTensor,
    pub q: DenseTensor,
    pub q_hat: DenseTensor,
    pub h: DenseTensor,
    pub v_cap: DenseTensor,
    pub f: DenseTensor,
    pub rho_prev: f64,
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn solve_tcors<O: LinearOperator + ?Sized>(
    op: &O,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    solve_tcors_monitored(op, d, x0, cfg, &mut NoMonitor)
}

/// Tensor conjugate L-orthogonal residual squared method.
///
/// A vanishing `ρ` ends the run with [`BreakdownKind::CorsResetInitialGuess`]; the
/// caller decides on a new `X₀`.
pub fn solve_tcors_monitored<O: LinearOperator + ?Sized>(
    op: &O,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
    monitor: &mut dyn SolveMonitor,
) -> Result<SolveReport> {
    let mut tracker = Tracker::new(op, d, x0, cfg)?;
    let mut x = x0.clone();
    let mut u = d.clone();
    u.axpy(-1.0, &op.apply(&x)?)?;
    if tracker.record(0, &x, u.norm(), monitor)? {
        return Ok(tracker.finish(x, 0, SolveStatus::Converged));
    }
    let r0_star = op.apply(&u)?;
    let r0_star_norm = r0_star.norm();

    let limit = cfg.iteration_limit(op.shape());
    let mut st: Option<TcorsState> = None;
    for n in 1..=limit {
        let breakdown = |kind| SolveStatus::Breakdown { kind, step: n };
        let z_hat = op.apply(&u)?;
        let rho = r0_star.inner(&z_hat)?;
        if vanishes(rho, r0_star_norm * z_hat.norm(), cfg.breakdown_tol) {
            return Ok(tracker.finish(x, n - 1, breakdown(BreakdownKind::CorsResetInitialGuess)));
        }
        let (t_hat, d_cap, c, q, rho_prev, beta) = match &st {
            None => (u.clone(), u.clone(), z_hat.clone(), z_hat.clone(), 0.0, 0.0),
            Some(prev) => {
                let beta = rho / prev.rho;
                let t_hat = DenseTensor::lincomb(1.0, &u, beta, &prev.h)?;
                let d_cap = DenseTensor::lincomb(1.0, &u, beta, &prev.v_cap)?;
                let c = DenseTensor::lincomb(1.0, &z_hat, beta, &prev.f)?;
                let mut q = DenseTensor::lincomb(1.0, &prev.f, beta, &prev.q)?;
                q.scale(beta);
                q.axpy(1.0, &c)?;
                (t_hat, d_cap, c, q, prev.rho, beta)
            }
        };
        let q_hat = op.apply(&q)?;
        let denom = r0_star.inner(&q_hat)?;
        if vanishes(denom, r0_star_norm * q_hat.norm(), cfg.breakdown_tol) {
            return Ok(tracker.finish(x, n - 1, breakdown(BreakdownKind::CorsDirection)));
        }
        let alpha = rho / denom;
        let h = DenseTensor::lincomb(1.0, &t_hat, -alpha, &q)?;
        let v_cap = DenseTensor::lincomb(1.0, &d_cap, -alpha, &q)?;
        let f = DenseTensor::lincomb(1.0, &c, -alpha, &q_hat)?;
        x.axpy(alpha, &DenseTensor::lincomb(2.0, &d_cap, -alpha, &q)?)?;
        u.axpy(-alpha, &DenseTensor::lincomb(2.0, &c, -alpha, &q_hat)?)?;

        let converged = tracker.record(n, &x, u.norm(), monitor)?;
        let state =
            TcorsState { u: u.clone(), z_hat, t_hat, d_cap, c, q, q_hat, h, v_cap, f, rho_prev, rho, alpha, beta };
        monitor.on_tcors(n, &state);
        if converged {
            return Ok(tracker.finish(x, n, SolveStatus::Converged));
        }
        st = Some(state);
    }
    Ok(tracker.finish(x, limit, SolveStatus::MaxIters))
}
