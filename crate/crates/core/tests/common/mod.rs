//! Scalar reference implementations on vectorized systems, written independently of
//! the tensor code so the two can be compared step by step.

#![allow(dead_code)]

use sylten_core::solvers::SolveMonitor;
use sylten_core::{DenseMatrix, DenseTensor};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn lin(alpha: f64, x: &[f64], beta: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect()
}

pub fn mv(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    let n = a.rows();
    let mut y = vec![0.0; n];
    for j in 0..a.cols() {
        for i in 0..n {
            y[i] += a[(i, j)] * x[j];
        }
    }
    y
}

pub fn mtv(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (0..a.cols()).map(|j| (0..a.rows()).map(|i| a[(i, j)] * x[i]).sum()).collect()
}

pub fn rel_diff(x: &[f64], reference: &[f64]) -> f64 {
    norm(&lin(1.0, x, -1.0, reference)) / norm(reference).max(1.0)
}

/// Gaussian elimination with partial pivoting on a row-major copy.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).chain([b[i]]).collect()).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        m.swap(k, p);
        let pivot = m[k].clone();
        for row in m.iter_mut().skip(k + 1) {
            let f = row[k] / pivot[k];
            for (a, b) in row[k..].iter_mut().zip(&pivot[k..]) {
                *a -= f * b;
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Two-sided Lanczos with the same normalization as the tensor code:
/// returns `(alpha, beta, delta)` after `m` steps.
pub fn scalar_lanczos(a: &DenseMatrix, v1: &[f64], w1: &[f64], m: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (mut alpha, mut beta, mut delta): (Vec<f64>, Vec<f64>, Vec<f64>) = (vec![], vec![], vec![]);
    let mut v = vec![v1.to_vec()];
    let mut w = vec![w1.to_vec()];
    for j in 0..m {
        let av = mv(a, &v[j]);
        let aj = dot(&mv(a, &av), &w[j]);
        alpha.push(aj);
        let mut vb = lin(1.0, &av, -aj, &v[j]);
        let mut wb = lin(1.0, &mtv(a, &w[j]), -aj, &w[j]);
        if j > 0 {
            vb = lin(1.0, &vb, -beta[j - 1], &v[j - 1]);
            wb = lin(1.0, &wb, -delta[j - 1], &w[j - 1]);
        }
        if j + 1 == m {
            break;
        }
        let s = dot(&wb, &mv(a, &vb));
        let d = s.abs().sqrt();
        delta.push(d);
        beta.push(s / d);
        v.push(vb.iter().map(|x| x / d).collect());
        w.push(wb.iter().map(|x| x / (s / d)).collect());
    }
    (alpha, beta, delta)
}

/// Scalar Lanczos-projection iterates `x_m = x₀ + V_m y_m` with `T_m y_m = ‖r₀‖ e₁`,
/// seeded with `v₁ = r₀/‖r₀‖`, `w₁ = A v₁ / ‖A v₁‖²`, for `m = 1 … max_m`.
pub fn lanczos_projection_iterates(a: &DenseMatrix, b: &[f64], x0: &[f64], max_m: usize) -> Vec<Vec<f64>> {
    let r0 = lin(1.0, b, -1.0, &mv(a, x0));
    let beta0 = norm(&r0);
    let v1: Vec<f64> = r0.iter().map(|x| x / beta0).collect();
    let av1 = mv(a, &v1);
    let w1: Vec<f64> = av1.iter().map(|x| x / dot(&av1, &av1)).collect();
    let (mut v, mut w) = (vec![v1], vec![w1]);
    let (mut alpha, mut beta, mut delta) = (Vec::new(), Vec::new(), Vec::new());
    let mut out = Vec::new();
    for j in 0..max_m {
        let av = mv(a, &v[j]);
        let aj = dot(&mv(a, &av), &w[j]);
        alpha.push(aj);
        let m = j + 1;
        let mut t = DenseMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = delta[i];
            }
        }
        let mut rhs = vec![0.0; m];
        rhs[0] = beta0;
        let y = dense_solve(&t, &rhs);
        let mut x = x0.to_vec();
        for (yi, vi) in y.iter().zip(&v) {
            x = lin(1.0, &x, *yi, vi);
        }
        out.push(x);

        let mut vb = lin(1.0, &av, -aj, &v[j]);
        let mut wb = lin(1.0, &mtv(a, &w[j]), -aj, &w[j]);
        if j > 0 {
            vb = lin(1.0, &vb, -beta[j - 1], &v[j - 1]);
            wb = lin(1.0, &wb, -delta[j - 1], &w[j - 1]);
        }
        let s = dot(&wb, &mv(a, &vb));
        if s == 0.0 {
            break;
        }
        let d = s.abs().sqrt();
        delta.push(d);
        beta.push(s / d);
        v.push(vb.iter().map(|x| x / d).collect());
        w.push(wb.iter().map(|x| x * d / s).collect());
    }
    out
}

/// Modified Gram–Schmidt Arnoldi basis of `K_m(op, start)`, stopping early on exhaustion.
fn krylov_basis(start: &[f64], m: usize, op: impl Fn(&[f64]) -> Vec<f64>) -> Vec<Vec<f64>> {
    let mut q = vec![start.iter().map(|x| x / norm(start)).collect::<Vec<_>>()];
    while q.len() < m {
        let mut z = op(q.last().unwrap());
        let z0 = norm(&z);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(&z, qi);
                z = lin(1.0, &z, -c, qi);
            }
        }
        let nz = norm(&z);
        if nz <= 1e-12 * z0 {
            break;
        }
        q.push(z.iter().map(|x| x / nz).collect());
    }
    q
}

/// Oblique-projection iterates: `x_m ∈ x₀ + K_m(A, r₀)` with
/// `A r_m ⊥ K_m(Aᵀ, A r₀)`, for `m = 1 … max_m`.
pub fn projection_iterates(a: &DenseMatrix, b: &[f64], x0: &[f64], max_m: usize) -> Vec<Vec<f64>> {
    let r0 = lin(1.0, b, -1.0, &mv(a, x0));
    let q = krylov_basis(&r0, max_m, |x| mv(a, x));
    let g = krylov_basis(&mv(a, &r0), max_m, |x| mtv(a, x));
    let m_max = q.len().min(g.len());
    let aaq: Vec<Vec<f64>> = q.iter().map(|qi| mv(a, &mv(a, qi))).collect();
    let ar0 = mv(a, &r0);
    let mut out = Vec::new();
    for m in 1..=m_max {
        let mut small = DenseMatrix::zeros(m, m);
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            rhs[i] = dot(&g[i], &ar0);
            for j in 0..m {
                small[(i, j)] = dot(&g[i], &aaq[j]);
            }
        }
        let z = dense_solve(&small, &rhs);
        let mut x = x0.to_vec();
        for (zj, qj) in z.iter().zip(&q) {
            x = lin(1.0, &x, *zj, qj);
        }
        out.push(x);
    }
    out
}

/// BiCOR on `A x = b` with shadow residual `A r₀`; iterates `x_1 … x_n`.
pub fn scalar_bicor(a: &DenseMatrix, b: &[f64], x0: &[f64], iters: usize) -> Vec<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut r = lin(1.0, b, -1.0, &mv(a, &x));
    let mut rs = mv(a, &r);
    let n = x.len();
    let (mut p, mut ps) = (vec![0.0; n], vec![0.0; n]);
    let mut beta = 0.0;
    let mut out = Vec::new();
    for _ in 0..iters {
        let ar = mv(a, &r);
        let rho = dot(&rs, &ar);
        p = lin(1.0, &r, beta, &p);
        ps = lin(1.0, &rs, beta, &ps);
        let q = mv(a, &p);
        let qs = mtv(a, &ps);
        let alpha = rho / dot(&qs, &q);
        x = lin(1.0, &x, alpha, &p);
        r = lin(1.0, &r, -alpha, &q);
        rs = lin(1.0, &rs, -alpha, &qs);
        beta = dot(&rs, &mv(a, &r)) / rho;
        out.push(x.clone());
    }
    out
}

/// CORS on `A x = b` with shadow `A r₀`; iterates `x_1 … x_n`.
pub fn scalar_cors(a: &DenseMatrix, b: &[f64], x0: &[f64], iters: usize) -> Vec<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut u = lin(1.0, b, -1.0, &mv(a, &x));
    let shadow = mv(a, &u);
    let n = x.len();
    let (mut h, mut v, mut f, mut q) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut rho_old = 1.0;
    let mut out = Vec::new();
    for it in 0..iters {
        let au = mv(a, &u);
        let rho = dot(&shadow, &au);
        let beta = if it == 0 { 0.0 } else { rho / rho_old };
        let t = lin(1.0, &u, beta, &h);
        let d = lin(1.0, &u, beta, &v);
        let c = lin(1.0, &au, beta, &f);
        let inner = lin(1.0, &f, beta, &q);
        q = lin(1.0, &c, beta, &inner);
        let aq = mv(a, &q);
        let alpha = rho / dot(&shadow, &aq);
        h = lin(1.0, &t, -alpha, &q);
        v = lin(1.0, &d, -alpha, &q);
        f = lin(1.0, &c, -alpha, &aq);
        x = lin(1.0, &x, alpha, &lin(2.0, &d, -alpha, &q));
        u = lin(1.0, &u, -alpha, &lin(2.0, &c, -alpha, &aq));
        rho_old = rho;
        out.push(x.clone());
    }
    out
}

/// Collects every iterate a solver reports, starting with `X₀`.
#[derive(Default)]
pub struct Iterates(pub Vec<Vec<f64>>);

impl SolveMonitor for Iterates {
    fn on_iterate(&mut self, _k: usize, x: &DenseTensor) {
        self.0.push(x.vectorize());
    }
}
