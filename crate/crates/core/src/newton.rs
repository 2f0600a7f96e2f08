//! Damped Newton iteration with a finite-difference Jacobian.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{central_jacobian, condition_number, ensure_finite, max_abs};

/// Solver settings shared by the DEL stepper and the Lie–Poisson stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Absolute tolerance on the max-norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of step halvings tried before an increase in residual is accepted.
    pub max_halvings: usize,
    /// Jacobians with a larger 2-norm condition number raise [`Error::Regularity`].
    pub condition_limit: f64,
    /// Relative step for the central-difference Jacobian.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            max_halvings: 8,
            condition_limit: 1e12,
            fd_step: 1e-7,
        }
    }
}

/// Result of a converged solve.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub x: DVector<f64>,
    /// Max-norm of the residual at `x`.
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `f(x) = 0` starting from `x0`.
pub fn solve<F>(f: F, x0: DVector<f64>, opts: &NewtonOptions) -> Result<NewtonReport>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut x = x0;
    let mut r = f(&x)?;
    ensure_finite(&r, "residual")?;
    if r.len() != x.len() {
        return Err(Error::Configuration(format!(
            "Newton system is not square: {} equations, {} unknowns",
            r.len(),
            x.len()
        )));
    }
    for iter in 0..opts.max_iter {
        let res = max_abs(&r);
        if res <= opts.tol {
            return Ok(NewtonReport { x, residual: res, iterations: iter });
        }
        let jac = central_jacobian(&f, &x, opts.fd_step)?;
        let cond = condition_number(&jac);
        if !(cond <= opts.condition_limit) {
            return Err(Error::Regularity {
                condition: cond,
                limit: opts.condition_limit,
            });
        }
        let dx = jac
            .lu()
            .solve(&(-&r))
            .ok_or(Error::Regularity { condition: f64::INFINITY, limit: opts.condition_limit })?;

        let norm0 = r.norm();
        let mut t = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..=opts.max_halvings {
            let trial = &x + &dx * t;
            if let Ok(rt) = f(&trial) {
                if rt.iter().all(|v| v.is_finite()) {
                    if rt.norm() < norm0 {
                        accepted = Some((trial, rt));
                        break;
                    }
                    fallback = Some((trial, rt));
                }
            }
            t *= 0.5;
        }
        match accepted.or(fallback) {
            Some((xn, rn)) => {
                x = xn;
                r = rn;
            }
            None => {
                return Err(Error::Solver {
                    iterations: iter + 1,
                    residual: res,
                })
            }
        }
    }
    let res = max_abs(&r);
    if res <= opts.tol {
        Ok(NewtonReport { x, residual: res, iterations: opts.max_iter })
    } else {
        Err(Error::Solver {
            iterations: opts.max_iter,
            residual: res,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_nonlinear_system() {
        let f = |x: &DVector<f64>| {
            Ok(DVector::from_vec(vec![
                x[0] * x[0] + x[1] * x[1] - 4.0,
                x[0] - x[1],
            ]))
        };
        let rep = solve(f, DVector::from_vec(vec![1.0, 0.5]), &NewtonOptions::default()).unwrap();
        let s = 2.0_f64.sqrt();
        assert!((rep.x[0] - s).abs() < 1e-10 && (rep.x[1] - s).abs() < 1e-10);
        assert!(rep.residual <= 1e-10);
    }

    #[test]
    fn singular_jacobian_is_a_regularity_error() {
        let f = |x: &DVector<f64>| Ok(DVector::from_vec(vec![x[0] + x[1] - 1.0, 2.0 * x[0] + 2.0 * x[1] - 2.5]));
        let err = solve(f, DVector::zeros(2), &NewtonOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Regularity { .. }));
    }

    #[test]
    fn no_root_is_a_solver_error() {
        let f = |x: &DVector<f64>| Ok(DVector::from_vec(vec![x[0] * x[0] + 1.0]));
        let opts = NewtonOptions { max_iter: 10, ..Default::default() };
        let err = solve(f, DVector::from_vec(vec![0.3]), &opts).unwrap_err();
        assert!(matches!(err, Error::Solver { .. } | Error::Regularity { .. }));
    }
}
