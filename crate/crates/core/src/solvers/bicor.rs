use super::{vanishes, BreakdownKind, NoMonitor, SolveConfig, SolveMonitor, SolveReport, SolveStatus, Tracker};
use crate::error::Result;
use crate::operator::LinearOperator;
use crate::tensor::DenseTensor;

/// TBiCOR quantities as seen by a monitor after iteration `n`.
///
/// `r`, `r_star` and `t = L(r)` belong to iteration `n`. The direction tensors
/// `p`, `p_star`, `s = L(p)`, `s_star = Lᵀ(p_star)` and `alpha` are the ones that
/// produced it, and `beta` is the coefficient for the next direction (zero if not yet
/// computed). At `n = 0` the directions are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BicorState {
    pub r: DenseTensor,
    pub r_star: DenseTensor,
    pub p: DenseTensor,
    pub p_star: DenseTensor,
    pub s: DenseTensor,
    pub s_star: DenseTensor,
    pub t: DenseTensor,
    pub alpha: f64,
    pub beta: f64,
}

pub fn solve_tbicor<O: LinearOperator + ?Sized>(
    op: &O,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    solve_tbicor_monitored(op, d, x0, cfg, &mut NoMonitor)
}

/// Tensor biconjugate L-orthogonal residual method with shadow residual `R₀* = L(R₀)`.
pub fn solve_tbicor_monitored<O: LinearOperator + ?Sized>(
    op: &O,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
    monitor: &mut dyn SolveMonitor,
) -> Result<SolveReport> {
    let mut tracker = Tracker::new(op, d, x0, cfg)?;
    let mut x = x0.clone();
    let mut r = d.clone();
    r.axpy(-1.0, &op.apply(&x)?)?;
    let t = op.apply(&r)?;
    let zero = DenseTensor::zeros(op.shape().clone());
    let mut st = BicorState {
        r_star: t.clone(),
        t,
        r,
        p: zero.clone(),
        p_star: zero.clone(),
        s: zero.clone(),
        s_star: zero,
        alpha: 0.0,
        beta: 0.0,
    };
    let converged = tracker.record(0, &x, st.r.norm(), monitor)?;
    monitor.on_bicor(0, &st);
    if converged {
        return Ok(tracker.finish(x, 0, SolveStatus::Converged));
    }

    let limit = cfg.iteration_limit(op.shape());
    let mut rho = st.r_star.inner(&st.t)?;
    for n in 1..=limit {
        let breakdown = |kind| SolveStatus::Breakdown { kind, step: n };
        if vanishes(rho, st.r_star.norm() * st.t.norm(), cfg.breakdown_tol) {
            return Ok(tracker.finish(x, n - 1, breakdown(BreakdownKind::BicorResidual)));
        }
        st.p.scale(st.beta);
        st.p.axpy(1.0, &st.r)?;
        st.p_star.scale(st.beta);
        st.p_star.axpy(1.0, &st.r_star)?;
        st.s = op.apply(&st.p)?;
        st.s_star = op.apply_transpose(&st.p_star)?;
        let denom = st.s_star.inner(&st.s)?;
        if vanishes(denom, st.s_star.norm() * st.s.norm(), cfg.breakdown_tol) {
            return Ok(tracker.finish(x, n - 1, breakdown(BreakdownKind::BicorDirection)));
        }
        st.alpha = rho / denom;
        x.axpy(st.alpha, &st.p)?;
        st.r.axpy(-st.alpha, &st.s)?;
        st.r_star.axpy(-st.alpha, &st.s_star)?;
        st.t = op.apply(&st.r)?;
        st.beta = 0.0;

        if tracker.record(n, &x, st.r.norm(), monitor)? {
            monitor.on_bicor(n, &st);
            return Ok(tracker.finish(x, n, SolveStatus::Converged));
        }
        let rho_next = st.r_star.inner(&st.t)?;
        st.beta = rho_next / rho;
        rho = rho_next;
        monitor.on_bicor(n, &st);
    }
    Ok(tracker.finish(x, limit, SolveStatus::MaxIters))
}
