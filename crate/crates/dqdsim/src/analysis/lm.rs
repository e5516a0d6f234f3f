//! Bounded Levenberg–Marquardt with Marquardt's diagonal scaling and a central
//! difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when a step changes every parameter by less than this relative amount.
    pub x_tol: f64,
    /// Stop when an accepted step lowers the cost by less than this relative amount.
    pub f_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iterations: 500, x_tol: 1e-13, f_tol: 1e-15 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmSolution {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A residual function over box-bounded parameters.
pub(crate) struct Residuals<'a> {
    pub f: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    pub bounds: &'a [(f64, f64)],
    /// Typical magnitude of each parameter; sets the finite-difference step floor.
    pub scale: &'a [f64],
}

impl Residuals<'_> {
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn jacobian(&self, x: &[f64], r0: &[f64]) -> DMatrix<f64> {
        let (m, n) = (r0.len(), x.len());
        let mut jac = DMatrix::zeros(m, n);
        for j in 0..n {
            let h = 1e-6 * x[j].abs().max(self.scale[j]);
            let (lo, hi) = self.bounds[j];
            let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
            xp[j] = (x[j] + h).min(hi);
            xm[j] = (x[j] - h).max(lo);
            let span = xp[j] - xm[j];
            if span <= 0.0 {
                continue;
            }
            let (rp, rm) = if xm[j] == x[j] {
                ((self.f)(&xp), r0.to_vec())
            } else if xp[j] == x[j] {
                (r0.to_vec(), (self.f)(&xm))
            } else {
                ((self.f)(&xp), (self.f)(&xm))
            };
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / span;
            }
        }
        jac
    }
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

pub(crate) fn minimize(problem: &Residuals, x0: &[f64], opts: &LmOptions) -> LmSolution {
    let mut x = x0.to_vec();
    problem.clamp(&mut x);
    let mut r = (problem.f)(&x);
    let mut cost = cost_of(&r);
    let mut jac = problem.jacobian(&x, &r);
    let n = x.len();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations && !converged {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let diag: Vec<f64> = (0..n).map(|j| jtj[(j, j)].max(1e-300)).collect();
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for (j, d) in diag.iter().enumerate() {
                a[(j, j)] += lambda * d;
            }
            let Some(step) = a.clone().cholesky().map(|c| c.solve(&(-&g))).or_else(|| a.lu().solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            problem.clamp(&mut trial);
            let r_trial = (problem.f)(&trial);
            let c_trial = cost_of(&r_trial);
            if c_trial.is_finite() && c_trial <= cost {
                let small_step = x.iter().zip(&trial).all(|(a, b)| (a - b).abs() <= opts.x_tol * (a.abs() + opts.x_tol));
                let small_drop = cost - c_trial <= opts.f_tol * cost;
                x = trial;
                r = r_trial;
                cost = c_trial;
                jac = problem.jacobian(&x, &r);
                lambda = (lambda / 3.0).max(1e-12);
                converged = small_step || small_drop;
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no downhill step at any damping: a stationary point to working precision
            let grad = (jac.transpose() * DVector::from_column_slice(&r)).amax();
            converged = grad <= 1e-8 * (2.0 * cost).sqrt().max(1e-300) * jac.amax().max(1.0) || cost < 1e-28;
            break;
        }
    }
    LmSolution { x, residuals: r, jacobian: jac, cost, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]];
        let bounds = [(-5.0, 5.0); 2];
        let p = Residuals { f: &f, bounds: &bounds, scale: &[1.0, 1.0] };
        let s = minimize(&p, &[-1.2, 1.0], &LmOptions::default());
        assert!(s.converged);
        assert!((s.x[0] - 1.0).abs() < 1e-8 && (s.x[1] - 1.0).abs() < 1e-8, "{:?}", s.x);
    }

    #[test]
    fn bounds_are_respected() {
        let f = |x: &[f64]| vec![x[0] + 3.0];
        let p = Residuals { f: &f, bounds: &[(0.0, 10.0)], scale: &[1.0] };
        let s = minimize(&p, &[5.0], &LmOptions::default());
        assert_eq!(s.x[0], 0.0);
    }

    #[test]
    fn exponential_fit_is_exact_without_noise() {
        let t: Vec<f64> = (0..30).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-1.3 * t).exp()).collect();
        let f = |x: &[f64]| t.iter().zip(&y).map(|(t, y)| x[0] * (-x[1] * t).exp() - y).collect();
        let p = Residuals { f: &f, bounds: &[(-10.0, 10.0), (0.0, 10.0)], scale: &[1.0, 1.0] };
        let s = minimize(&p, &[1.0, 0.5], &LmOptions::default());
        assert!((s.x[0] - 2.5).abs() < 1e-10 && (s.x[1] - 1.3).abs() < 1e-10);
    }
}
