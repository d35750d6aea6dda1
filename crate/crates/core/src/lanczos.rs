//! Lanczos L-biorthogonalization in tensor form.
//!
//! Starting from `V₁`, `W₁` with `⟨W₁, L(V₁)⟩ = 1`, the three-term recurrences
//!
//! ```text
//! αⱼ     = ⟨L²(Vⱼ), Wⱼ⟩
//! V̄ⱼ₊₁   = L(Vⱼ)  − αⱼ Vⱼ − βⱼ Vⱼ₋₁
//! W̄ⱼ₊₁   = Lᵀ(Wⱼ) − αⱼ Wⱼ − δⱼ Wⱼ₋₁
//! δⱼ₊₁   = |⟨W̄ⱼ₊₁, L(V̄ⱼ₊₁)⟩|^½,   βⱼ₊₁ = ⟨W̄ⱼ₊₁, L(V̄ⱼ₊₁)⟩ / δⱼ₊₁
//! Vⱼ₊₁   = V̄ⱼ₊₁ / δⱼ₊₁,            Wⱼ₊₁ = W̄ⱼ₊₁ / βⱼ₊₁
//! ```
//!
//! produce bases with `⟨Wᵢ, L(Vⱼ)⟩ = δᵢⱼ` and the tridiagonal `T_m` (diagonal α,
//! superdiagonal β, subdiagonal δ). All basis tensors are kept.

use alloc::{boxed::Box, vec, vec::Vec};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::operator::LinearOperator;
use crate::tensor::{boxtimes, DenseTensor};

/// Scale factor of the breakdown test `|⟨W̄, L(V̄)⟩| ≤ tol · (1 + ‖L(V̄)‖ ‖W̄‖)`.
pub const DEFAULT_BREAKDOWN_TOL: f64 = 1e-13;

/// Relative pivot guard for the unpivoted tridiagonal LU.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TridiagonalMatrix {
    alpha: Vec<f64>,
    /// `β₂ … β_m`
    beta: Vec<f64>,
    /// `δ₂ … δ_m`
    delta: Vec<f64>,
    next_beta: f64,
    next_delta: f64,
}

impl TridiagonalMatrix {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        let m = alpha.len();
        if m == 0 || beta.len() + 1 != m || delta.len() + 1 != m {
            return Err(Error::InvalidShape(alloc::format!(
                "tridiagonal with {} diagonal, {} super and {} sub entries",
                m,
                beta.len(),
                delta.len()
            )));
        }
        Ok(Self { alpha, beta, delta, next_beta: 0.0, next_delta: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// `δ_{m+1}`, the entry below the square block in the extended matrix.
    pub fn next_delta(&self) -> f64 {
        self.next_delta
    }

    /// `β_{m+1}`, the matching coefficient of the dual recurrence.
    pub fn next_beta(&self) -> f64 {
        self.next_beta
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let m = self.dim();
        let mut t = DenseMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.delta[i];
            }
        }
        t
    }

    /// The `(m+1) × m` matrix with `δ_{m+1} e_mᵀ` appended as a last row.
    pub fn extended_dense(&self) -> DenseMatrix {
        let m = self.dim();
        let t = self.to_dense();
        DenseMatrix::from_fn(m + 1, m, |i, j| {
            if i < m {
                t[(i, j)]
            } else if j + 1 == m {
                self.next_delta
            } else {
                0.0
            }
        })
    }

    pub fn matvec(&self, y: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|i| {
                let mut s = self.alpha[i] * y[i];
                if i > 0 {
                    s += self.delta[i - 1] * y[i - 1];
                }
                if i + 1 < m {
                    s += self.beta[i] * y[i + 1];
                }
                s
            })
            .collect()
    }

    fn push(&mut self, alpha: f64) {
        if !self.alpha.is_empty() {
            self.beta.push(self.next_beta);
            self.delta.push(self.next_delta);
        }
        self.alpha.push(alpha);
        self.next_beta = 0.0;
        self.next_delta = 0.0;
    }
}

/// Unit-lower-bidiagonal `L_m` and upper-bidiagonal `U_m` with `L_m U_m = T_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BidiagonalPair {
    /// Subdiagonal multipliers of `L_m` (length m−1).
    pub lower: Vec<f64>,
    /// Diagonal of `U_m`.
    pub upper_diag: Vec<f64>,
    /// Superdiagonal of `U_m`, equal to the superdiagonal of `T_m`.
    pub upper_super: Vec<f64>,
}

impl BidiagonalPair {
    pub fn lower_dense(&self) -> DenseMatrix {
        let m = self.upper_diag.len();
        DenseMatrix::from_fn(m, m, |i, j| {
            if i == j {
                1.0
            } else if i == j + 1 {
                self.lower[j]
            } else {
                0.0
            }
        })
    }

    pub fn upper_dense(&self) -> DenseMatrix {
        let m = self.upper_diag.len();
        DenseMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.upper_diag[i]
            } else if j == i + 1 {
                self.upper_super[i]
            } else {
                0.0
            }
        })
    }

    /// Forward then backward substitution.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.upper_diag.len();
        let mut y = rhs.to_vec();
        for i in 1..m {
            y[i] -= self.lower[i - 1] * y[i - 1];
        }
        y[m - 1] /= self.upper_diag[m - 1];
        for i in (0..m - 1).rev() {
            y[i] = (y[i] - self.upper_super[i] * y[i + 1]) / self.upper_diag[i];
        }
        y
    }
}

/// LU factorization of `T_m` without pivoting. A pivot with magnitude at most
/// `pivot_tol` times the largest entry of `T_m` is a serious breakdown.
pub fn lu_tridiagonal(t: &TridiagonalMatrix, pivot_tol: f64) -> Result<BidiagonalPair> {
    let m = t.dim();
    let scale = t.alpha.iter().chain(&t.beta).chain(&t.delta).map(|v| libm::fabs(*v)).fold(0.0, f64::max);
    let guard = |index: usize, u: f64| {
        if !(libm::fabs(u) > pivot_tol * scale) || !u.is_finite() {
            Err(Error::SingularPivot { index, value: u })
        } else {
            Ok(())
        }
    };
    let mut upper_diag = Vec::with_capacity(m);
    let mut lower = Vec::with_capacity(m.saturating_sub(1));
    upper_diag.push(t.alpha[0]);
    guard(0, t.alpha[0])?;
    for i in 1..m {
        let l = t.delta[i - 1] / upper_diag[i - 1];
        let u = t.alpha[i] - l * t.beta[i - 1];
        guard(i, u)?;
        lower.push(l);
        upper_diag.push(u);
    }
    Ok(BidiagonalPair { lower, upper_diag, upper_super: t.beta.clone() })
}

/// Solves `T y = rhs` through [`lu_tridiagonal`].
pub fn tridiagonal_solve(t: &TridiagonalMatrix, rhs: &[f64], pivot_tol: f64) -> Result<Vec<f64>> {
    if rhs.len() != t.dim() {
        return Err(Error::ShapeMismatch {
            context: "tridiagonal_solve",
            detail: alloc::format!("{}x{} system with rhs of length {}", t.dim(), t.dim(), rhs.len()),
        });
    }
    Ok(lu_tridiagonal(t, pivot_tol)?.solve(rhs))
}

/// `V₁ = R₀ / ‖R₀‖` and `W₁ = L(V₁) / ⟨L(V₁), L(V₁)⟩`, so that `⟨L(V₁), W₁⟩ = 1`.
pub fn seed_pair<O: LinearOperator + ?Sized>(
    op: &O,
    r0: &DenseTensor,
    breakdown_tol: f64,
) -> Result<(DenseTensor, DenseTensor)> {
    op.check_input(r0, "seed_pair")?;
    let nr = r0.norm();
    if nr == 0.0 {
        return Err(Error::ZeroResidual);
    }
    let v1 = r0.scaled(1.0 / nr);
    let lv = op.apply(&v1)?;
    let q = lv.inner(&lv)?;
    if q < breakdown_tol {
        return Err(Error::DegenerateSeed);
    }
    Ok((v1, lv.scaled(1.0 / q)))
}

/// Bases and coefficients after `steps` passes of the recurrence.
///
/// `v` and `w` hold `steps + 1` tensors unless the run broke down, in which case the
/// last normalized pair is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct LanczosState {
    pub v: Vec<DenseTensor>,
    pub w: Vec<DenseTensor>,
    pub t: TridiagonalMatrix,
    pub steps: usize,
    /// `V̄_{m+1}` before normalization (zero on a lucky breakdown).
    pub next_unnormalized: DenseTensor,
}

/// Max deviation of the extended three-term relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationDeviation {
    /// `max_j ‖L(V_j) − (β_j V_{j−1} + α_j V_j + δ_{j+1} V_{j+1})‖`
    pub primal: f64,
    /// `max_j ‖Lᵀ(W_j) − (δ_j W_{j−1} + α_j W_j + β_{j+1} W_{j+1})‖`
    pub dual: f64,
}

impl RelationDeviation {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual)
    }
}

impl LanczosState {
    /// `max |⟨Wᵢ, L(Vⱼ)⟩ − δᵢⱼ|` over `i, j ≤ m`.
    pub fn biorthogonality_defect<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<f64> {
        let m = self.steps;
        let lv: Vec<DenseTensor> = self.v[..m].iter().map(|v| op.apply(v)).collect::<Result<_>>()?;
        let mut worst = 0.0f64;
        for (i, w) in self.w[..m].iter().enumerate() {
            for (j, h) in lv.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max(libm::fabs(w.inner(h)? - target));
            }
        }
        Ok(worst)
    }

    /// `W̃_m ⊠ L(H̃_m)` with `H_j = L(V_j)`, which reconstructs `T_m`.
    pub fn projected_matrix<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<DenseMatrix> {
        let m = self.steps;
        let llv: Vec<DenseTensor> = self.v[..m].iter().map(|v| op.apply(&op.apply(v)?)).collect::<Result<_>>()?;
        let level = op.shape().order() + 1;
        boxtimes(&DenseTensor::stack(&self.w[..m])?, &DenseTensor::stack(&llv)?, level)
    }

    /// `W̃_m ⊠ H̃_m`, which is the identity under biorthogonality.
    pub fn gram_matrix<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<DenseMatrix> {
        let m = self.steps;
        let lv: Vec<DenseTensor> = self.v[..m].iter().map(|v| op.apply(v)).collect::<Result<_>>()?;
        let level = op.shape().order() + 1;
        boxtimes(&DenseTensor::stack(&self.w[..m])?, &DenseTensor::stack(&lv)?, level)
    }
}

/// Residual norms of the relations `H̃_m = Ṽ_{m+1} ×_{N+1} T̲_mᵀ` and its dual.
///
/// Missing trailing basis tensors (after a breakdown) contribute nothing.
pub fn extended_relation_check<O: LinearOperator + ?Sized>(state: &LanczosState, op: &O) -> Result<RelationDeviation> {
    let t = &state.t;
    let m = state.steps;
    let mut dev = RelationDeviation { primal: 0.0, dual: 0.0 };
    for j in 0..m {
        let mut r = op.apply(&state.v[j])?;
        r.axpy(-t.alpha[j], &state.v[j])?;
        let mut g = op.apply_transpose(&state.w[j])?;
        g.axpy(-t.alpha[j], &state.w[j])?;
        if j > 0 {
            r.axpy(-t.beta[j - 1], &state.v[j - 1])?;
            g.axpy(-t.delta[j - 1], &state.w[j - 1])?;
        }
        let (down, up) = if j + 1 < m { (t.delta[j], t.beta[j]) } else { (t.next_delta, t.next_beta) };
        if let Some(v) = state.v.get(j + 1) {
            r.axpy(-down, v)?;
        }
        if let Some(w) = state.w.get(j + 1) {
            g.axpy(-up, w)?;
        }
        dev.primal = dev.primal.max(r.norm());
        dev.dual = dev.dual.max(g.norm());
    }
    Ok(dev)
}

/// Result of one pass of the recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Extended,
    /// `⟨W̄, L(V̄)⟩` vanished; the basis cannot grow past the current step.
    Breakdown,
}

/// Incremental driver of the recurrence, one basis vector per [`step`](Self::step).
#[derive(Debug)]
pub struct LanczosProcess<'a, O: LinearOperator + ?Sized> {
    op: &'a O,
    v: Vec<DenseTensor>,
    w: Vec<DenseTensor>,
    /// `L(V_j)`, cached from the previous step.
    lv: Vec<DenseTensor>,
    t: TridiagonalMatrix,
    next_unnormalized: DenseTensor,
    breakdown_tol: f64,
    broken: bool,
}

impl<'a, O: LinearOperator + ?Sized> LanczosProcess<'a, O> {
    /// Requires `⟨W₁, L(V₁)⟩ = 1` to within `1e-10`.
    pub fn new(op: &'a O, v1: DenseTensor, w1: DenseTensor, breakdown_tol: f64) -> Result<Self> {
        op.check_input(&v1, "LanczosProcess::new")?;
        op.check_input(&w1, "LanczosProcess::new")?;
        let lv1 = op.apply(&v1)?;
        let pairing = w1.inner(&lv1)?;
        if !(libm::fabs(pairing - 1.0) <= 1e-10) {
            return Err(Error::InvalidConfig(alloc::format!("seed pairing ⟨W₁, L(V₁)⟩ = {pairing}, expected 1")));
        }
        let zero = DenseTensor::zeros(op.shape().clone());
        Ok(Self {
            op,
            v: vec![v1],
            w: vec![w1],
            lv: vec![lv1],
            t: TridiagonalMatrix::default(),
            next_unnormalized: zero,
            breakdown_tol,
            broken: false,
        })
    }

    pub fn steps(&self) -> usize {
        self.t.dim()
    }

    pub fn is_broken(&self) -> bool {
        self.broken
    }

    pub fn basis(&self) -> &[DenseTensor] {
        &self.v
    }

    pub fn dual_basis(&self) -> &[DenseTensor] {
        &self.w
    }

    pub fn tridiagonal(&self) -> &TridiagonalMatrix {
        &self.t
    }

    pub fn next_unnormalized(&self) -> &DenseTensor {
        &self.next_unnormalized
    }

    /// Runs pass `j = steps() + 1`. Calling again after a breakdown is an error.
    pub fn step(&mut self) -> Result<StepOutcome> {
        if self.broken {
            return Err(Error::InvalidConfig("Lanczos process already broke down".into()));
        }
        let j = self.t.dim();
        let op = self.op;
        let alpha = op.apply(&self.lv[j])?.inner(&self.w[j])?;

        let mut vbar = self.lv[j].clone();
        vbar.axpy(-alpha, &self.v[j])?;
        let mut wbar = op.apply_transpose(&self.w[j])?;
        wbar.axpy(-alpha, &self.w[j])?;
        if j > 0 {
            vbar.axpy(-self.t.next_beta, &self.v[j - 1])?;
            wbar.axpy(-self.t.next_delta, &self.w[j - 1])?;
        }
        self.t.push(alpha);

        let lvbar = op.apply(&vbar)?;
        let s = wbar.inner(&lvbar)?;
        self.next_unnormalized = vbar;
        if libm::fabs(s) <= self.breakdown_tol * (1.0 + lvbar.norm() * wbar.norm()) {
            self.broken = true;
            return Ok(StepOutcome::Breakdown);
        }
        let delta = libm::sqrt(libm::fabs(s));
        let beta = s / delta;
        self.t.next_delta = delta;
        self.t.next_beta = beta;
        self.v.push(self.next_unnormalized.scaled(1.0 / delta));
        self.w.push(wbar.scaled(1.0 / beta));
        self.lv.push(lvbar.scaled(1.0 / delta));
        Ok(StepOutcome::Extended)
    }

    pub fn into_state(self) -> LanczosState {
        LanczosState { steps: self.t.dim(), v: self.v, w: self.w, t: self.t, next_unnormalized: self.next_unnormalized }
    }

    pub fn state(&self) -> LanczosState {
        LanczosState {
            steps: self.t.dim(),
            v: self.v.clone(),
            w: self.w.clone(),
            t: self.t.clone(),
            next_unnormalized: self.next_unnormalized.clone(),
        }
    }
}

/// Runs up to `m` passes of the recurrence from a prepared seed pair.
///
/// A vanishing `⟨W̄_{j+1}, L(V̄_{j+1})⟩` ends the run with [`Error::LanczosBreakdown`],
/// which carries the partial state.
pub fn lanczos_procedure<O: LinearOperator + ?Sized>(
    op: &O,
    v1: DenseTensor,
    w1: DenseTensor,
    m: usize,
    breakdown_tol: f64,
) -> Result<LanczosState> {
    if m == 0 {
        return Err(Error::InvalidConfig("Lanczos needs at least one step".into()));
    }
    let mut process = LanczosProcess::new(op, v1, w1, breakdown_tol)?;
    for _ in 0..m {
        if process.step()? == StepOutcome::Breakdown {
            let step = process.steps();
            return Err(Error::LanczosBreakdown { step, partial: Box::new(process.into_state()) });
        }
    }
    Ok(process.into_state())
}
