//! Derivative-free simplex minimization with fminsearch-compatible defaults.

use alloc::{vec, vec::Vec};
use core::cell::Cell;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Simplex size threshold, max-norm distance of every vertex from the best one.
    pub xtol: f64,
    /// Spread threshold on the vertex function values.
    pub ftol: f64,
    /// `None` means `2000 · k` for `k` unknowns.
    pub max_evals: Option<usize>,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            xtol: 1e-10,
            ftol: 1e-10,
            max_evals: None,
        }
    }
}

impl NelderMeadConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.reflection > 0.0
            && self.expansion > 1.0
            && self.expansion > self.reflection
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.xtol >= 0.0
            && self.ftol >= 0.0
            && self.max_evals != Some(0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!("invalid Nelder-Mead settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    /// False when the evaluation budget ran out before both tolerances were met.
    pub converged: bool,
}

/// Minimizes `f` from `x0`.
///
/// The initial simplex moves each coordinate by 5% (or by `0.00025` when it is zero).
/// Iteration stops once the simplex is smaller than `xtol` and its values agree to
/// `ftol`, or when the budget is spent. Non-finite values are treated as `+∞`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], cfg: &NelderMeadConfig) -> Result<NelderMeadResult> {
    cfg.validate()?;
    let k = x0.len();
    if k == 0 {
        return Err(Error::InvalidConfig("Nelder-Mead needs at least one unknown".into()));
    }
    let budget = cfg.max_evals.unwrap_or(2000 * k);
    let evals = Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..k {
        let mut x = x0.to_vec();
        x[i] = if x[i] != 0.0 { 1.05 * x[i] } else { 0.00025 };
        let fx = eval(&x);
        simplex.push((x, fx));
    }
    let sort = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    sort(&mut simplex);

    let point =
        |a: &[f64], t: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect() };

    let mut converged = false;
    while evals.get() < budget {
        let best = &simplex[0];
        let fspread = simplex.iter().map(|v| libm::fabs(v.1 - best.1)).fold(0.0, f64::max);
        let xspread =
            simplex.iter().flat_map(|v| v.0.iter().zip(&best.0).map(|(a, b)| libm::fabs(a - b))).fold(0.0, f64::max);
        if fspread <= cfg.ftol && xspread <= cfg.xtol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; k];
        for (x, _) in &simplex[..k] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / k as f64;
            }
        }
        let (worst, f_worst) = simplex[k].clone();
        let f_best = simplex[0].1;
        let f_second = simplex[k - 1].1;

        let xr = point(&centroid, -cfg.reflection, &worst);
        let fr = eval(&xr);
        let mut replacement = None;
        if fr < f_best {
            let xe = point(&centroid, -cfg.reflection * cfg.expansion, &worst);
            let fe = eval(&xe);
            replacement = Some(if fe < fr { (xe, fe) } else { (xr, fr) });
        } else if fr < f_second {
            replacement = Some((xr, fr));
        } else if fr < f_worst {
            let xc = point(&centroid, -cfg.reflection * cfg.contraction, &worst);
            let fc = eval(&xc);
            if fc <= fr {
                replacement = Some((xc, fc));
            }
        } else {
            let xcc = point(&centroid, cfg.contraction, &worst);
            let fcc = eval(&xcc);
            if fcc < f_worst {
                replacement = Some((xcc, fcc));
            }
        }

        match replacement {
            Some(v) => simplex[k] = v,
            None => {
                let anchor = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    v.0 = point(&anchor, cfg.shrink, &v.0);
                    v.1 = eval(&v.0);
                }
            }
        }
        sort(&mut simplex);
    }

    let (x, fx) = simplex.swap_remove(0);
    Ok(NelderMeadResult { x, f: fx, evals: evals.get(), converged })
}
