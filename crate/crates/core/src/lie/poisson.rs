//! Discrete constrained Lie–Poisson stepping on SO(3).

use std::sync::Arc;

use nalgebra::{DVector, Matrix3, Vector3};

use super::{coadjoint, Retraction};
use crate::error::{Error, Result};
use crate::newton::{self, NewtonOptions};

/// A smooth function on `so(3)` with its differential.
pub trait AlgebraFunction: Send + Sync {
    fn value(&self, xi: &Vector3<f64>) -> f64;
    fn gradient(&self, xi: &Vector3<f64>) -> Vector3<f64>;
}

/// `l(xi) = xi^T I xi / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCost {
    pub inertia: Matrix3<f64>,
}

impl QuadraticCost {
    pub fn diagonal(d: [f64; 3]) -> Self {
        Self { inertia: Matrix3::from_diagonal(&Vector3::from(d)) }
    }
}

impl AlgebraFunction for QuadraticCost {
    fn value(&self, xi: &Vector3<f64>) -> f64 {
        0.5 * xi.dot(&(self.inertia * xi))
    }

    fn gradient(&self, xi: &Vector3<f64>) -> Vector3<f64> {
        (self.inertia + self.inertia.transpose()) * xi * 0.5
    }
}

/// `Psi(xi) = a . xi - c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePin {
    pub a: Vector3<f64>,
    pub c: f64,
}

impl AffinePin {
    /// Pins coordinate `i` of `xi` to `c`.
    pub fn coordinate(i: usize, c: f64) -> Self {
        let mut a = Vector3::zeros();
        a[i] = 1.0;
        Self { a, c }
    }
}

impl AlgebraFunction for AffinePin {
    fn value(&self, xi: &Vector3<f64>) -> f64 {
        self.a.dot(xi) - self.c
    }

    fn gradient(&self, _xi: &Vector3<f64>) -> Vector3<f64> {
        self.a
    }
}

/// Which of the two equivalent step equations to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiePoissonForm {
    /// `(dtau^-1_{h xi_k})^* a_k = (dtau^-1_{-h xi_{k+1}})^* a_{k+1}`.
    Trivialized,
    /// `mu_{k+1} + lambda_{k+1} Phi_{k+1} = Ad*_{tau(h xi_k)} (mu_k + lambda_k Phi_k)`.
    Coadjoint,
}

/// Configuration, body velocity and multipliers at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct LiePoissonState {
    /// Accumulated configuration `g_k`.
    pub g: Matrix3<f64>,
    pub xi: Vector3<f64>,
    pub lambda: DVector<f64>,
}

fn augmented_differential(
    l: &dyn AlgebraFunction,
    psi: &[Arc<dyn AlgebraFunction>],
    xi: &Vector3<f64>,
    lambda: &DVector<f64>,
) -> Vector3<f64> {
    psi.iter()
        .zip(lambda.iter())
        .fold(l.gradient(xi), |acc, (p, &lam)| acc + p.gradient(xi) * lam)
}

/// Right-trivialized momentum `(dtau^-1_{-h xi})^* dl(xi)`.
pub fn lie_poisson_momentum(ret: Retraction, l: &dyn AlgebraFunction, h: f64, xi: &Vector3<f64>) -> Result<Vector3<f64>> {
    Ok(ret.dtau_inv_matrix(&(-xi * h))?.transpose() * l.gradient(xi))
}

/// One step of the discrete constrained Lie–Poisson equations.
pub fn lie_poisson_step(
    ret: Retraction,
    l: &dyn AlgebraFunction,
    psi: &[Arc<dyn AlgebraFunction>],
    h: f64,
    state: &LiePoissonState,
    form: LiePoissonForm,
    opts: &NewtonOptions,
) -> Result<LiePoissonState> {
    let m = psi.len();
    if state.lambda.len() != m {
        return Err(Error::Configuration(format!(
            "{} multipliers for {} constraints",
            state.lambda.len(),
            m
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Configuration("step size must be positive".into()));
    }
    let a_k = augmented_differential(l, psi, &state.xi, &state.lambda);
    let known = match form {
        LiePoissonForm::Trivialized => ret.dtau_inv_matrix(&(state.xi * h))?.transpose() * a_k,
        LiePoissonForm::Coadjoint => {
            let mu = ret.dtau_inv_matrix(&(-state.xi * h))?.transpose() * a_k;
            coadjoint(&ret.tau(&(state.xi * h))?, &mu)?
        }
    };
    let residual = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let xi = Vector3::new(x[0], x[1], x[2]);
        let lam = x.rows(3, m).into_owned();
        let a = augmented_differential(l, psi, &xi, &lam);
        let right = ret.dtau_inv_matrix(&(-xi * h))?.transpose() * a;
        let mut r = DVector::zeros(3 + m);
        let head = match form {
            LiePoissonForm::Trivialized => known - right,
            LiePoissonForm::Coadjoint => right - known,
        };
        r.rows_mut(0, 3).copy_from(&head);
        for (i, p) in psi.iter().enumerate() {
            r[3 + i] = p.value(&xi);
        }
        Ok(r)
    };
    let mut x0 = DVector::zeros(3 + m);
    x0.rows_mut(0, 3).copy_from(&state.xi);
    x0.rows_mut(3, m).copy_from(&state.lambda);
    let rep = newton::solve(residual, x0, opts)?;
    let xi = Vector3::new(rep.x[0], rep.x[1], rep.x[2]);
    Ok(LiePoissonState {
        g: state.g * ret.tau(&(xi * h))?,
        xi,
        lambda: rep.x.rows(3, m).into_owned(),
    })
}

/// Iterates [`lie_poisson_step`], returning `steps + 1` states.
#[allow(clippy::too_many_arguments)]
pub fn lie_poisson_run(
    ret: Retraction,
    l: &dyn AlgebraFunction,
    psi: &[Arc<dyn AlgebraFunction>],
    h: f64,
    initial: LiePoissonState,
    steps: usize,
    form: LiePoissonForm,
    opts: &NewtonOptions,
) -> Result<Vec<LiePoissonState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial);
    for k in 0..steps {
        let next = lie_poisson_step(ret, l, psi, h, &out[k], form, opts).map_err(|e| e.at_step(k + 1))?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms_agree_on_a_single_step() {
        let l = QuadraticCost::diagonal([1.0, 2.0, 3.0]);
        let psi: Vec<Arc<dyn AlgebraFunction>> = vec![];
        let s0 = LiePoissonState {
            g: Matrix3::identity(),
            xi: Vector3::new(0.5, -0.3, 0.8),
            lambda: DVector::zeros(0),
        };
        for ret in [Retraction::Exp, Retraction::Cay] {
            let opts = NewtonOptions::default();
            let a = lie_poisson_step(ret, &l, &psi, 0.1, &s0, LiePoissonForm::Trivialized, &opts).unwrap();
            let b = lie_poisson_step(ret, &l, &psi, 0.1, &s0, LiePoissonForm::Coadjoint, &opts).unwrap();
            assert!((a.xi - b.xi).amax() < 1e-9);
        }
    }

    #[test]
    fn pin_is_satisfied() {
        let l = QuadraticCost::diagonal([1.0, 2.0, 3.0]);
        let psi: Vec<Arc<dyn AlgebraFunction>> = vec![Arc::new(AffinePin::coordinate(2, 0.4))];
        let s0 = LiePoissonState {
            g: Matrix3::identity(),
            xi: Vector3::new(0.5, -0.3, 0.4),
            lambda: DVector::from_vec(vec![0.1]),
        };
        let s1 = lie_poisson_step(Retraction::Cay, &l, &psi, 0.1, &s0, LiePoissonForm::Trivialized, &NewtonOptions::default())
            .unwrap();
        assert!((s1.xi.z - 0.4).abs() < 1e-10);
    }
}
