//! Small dense Levenberg-Marquardt solver for the handful-of-parameters
//! fits in this crate (Lorentzian reflection, Ramsey fringe).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative change in the cost below which the fit is declared converged.
    pub cost_tolerance: f64,
    pub step_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 500, cost_tolerance: 1e-12, step_tolerance: 1e-11 }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Sum of squared (weighted) residuals at the solution.
    pub cost: f64,
    pub iterations: usize,
    /// `(J^T J)^-1` at the solution, unscaled.
    pub inverse_hessian: DMatrix<f64>,
    pub n_residuals: usize,
}

fn jacobian<F>(f: &F, p: &[f64], r0: &DVector<f64>) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    let m = r0.len();
    let n = p.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut work = p.to_vec();
    for k in 0..n {
        let h = 1e-6 * (1.0 + p[k].abs());
        work[k] = p[k] + h;
        let rp = f(&work);
        work[k] = p[k] - h;
        let rm = f(&work);
        work[k] = p[k];
        jac.set_column(k, &((rp - rm) / (2.0 * h)));
    }
    jac
}

/// Minimizes `|residuals(p)|^2` starting from `start`. Parameters are
/// expected to be pre-scaled to order one.
pub fn levenberg_marquardt<F>(residuals: F, start: &[f64], opts: &LmOptions) -> Result<LmFit>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    let n = start.len();
    let mut p = start.to_vec();
    let mut r = residuals(&p);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite residuals at the starting point".into()));
    }
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&residuals, &p, &r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            let rt = residuals(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let rel = (cost - ct) / cost.max(f64::MIN_POSITIVE);
                let step_norm = step.norm() / (1.0 + p.iter().map(|x| x * x).sum::<f64>().sqrt());
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel < opts.cost_tolerance || step_norm < opts.step_tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // no downhill step at any damping: stationary to working precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::Fit(format!(
            "no convergence after {iterations} iterations (cost {cost:.3e}, parameters {p:?})"
        )));
    }
    let jac = jacobian(&residuals, &p, &r);
    let jtj = jac.transpose() * &jac;
    let inverse_hessian = jtj
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular normal matrix at the solution".into()))?;
    Ok(LmFit { params: p, cost, iterations, inverse_hessian, n_residuals: r.len() })
}
