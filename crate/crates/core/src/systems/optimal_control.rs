//! Optimal control on SO(3) through a retraction: `L(g) = h l(tau^-1(g) / h)`.

use std::sync::Arc;

use nalgebra::{DVector, Matrix3, Vector3};

use crate::del::{ConstrainedSystem, SigmaPoint};
use crate::error::{Error, Result};
use crate::field::{Field, ScalarField};
use crate::groupoid::{AlgebroidBasis, Model, So3Group};
use crate::lie::{
    cay_inv_matrix, dexp_inv_closed, hat, log_so3, mat_to_vec, polar_rotation, vec_to_mat, vee_skew, AlgebraFunction,
    Retraction,
};

/// `tau^-1` extended to a neighbourhood of SO(3) in the 3x3 matrices.
///
/// Cayley: antisymmetric part of `2 (R - I)(R + I)^-1`. Exponential: `log` of the polar factor.
pub fn tau_inv_extended(ret: Retraction, r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    match ret {
        Retraction::Cay => Ok(vee_skew(&cay_inv_matrix(r)?)),
        Retraction::Exp => log_so3(&polar_rotation(r)?),
    }
}

/// Ambient gradient of `R -> <a, tau^-1(R)>`, exact on SO(3).
pub fn tau_inv_pullback(ret: Retraction, r: &Matrix3<f64>, a: &Vector3<f64>) -> Result<DVector<f64>> {
    let grad = match ret {
        Retraction::Cay => {
            let id = Matrix3::identity();
            let x = cay_inv_matrix(r)?;
            let inv = (r + id)
                .try_inverse()
                .ok_or_else(|| Error::Domain("R + I is singular".into()))?;
            ((id * 2.0 - x).transpose() * hat(a) * inv.transpose()) * 0.5
        }
        Retraction::Exp => {
            let zeta = log_so3(r)?;
            let j = dexp_inv_closed(&zeta);
            r * hat(&(j.transpose() * a)) * 0.5
        }
    };
    Ok(mat_to_vec(&grad))
}

/// `R -> h f(tau^-1(R) / h)` on the 9 row-major entries of `R`.
pub(crate) struct RetractedField {
    pub ret: Retraction,
    pub f: Arc<dyn AlgebraFunction>,
    pub h: f64,
    /// Offset of the matrix entries inside the element vector.
    pub offset: usize,
}

impl RetractedField {
    fn matrix(&self, x: &DVector<f64>) -> Result<Matrix3<f64>> {
        if x.len() < self.offset + 9 {
            return Err(Error::Domain("element too short for a 3x3 matrix".into()));
        }
        Ok(vec_to_mat(&x.as_slice()[self.offset..self.offset + 9]))
    }
}

impl ScalarField for RetractedField {
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let zeta = tau_inv_extended(self.ret, &self.matrix(x)?)?;
        Ok(self.h * self.f.value(&(zeta / self.h)))
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<Result<DVector<f64>>> {
        Some((|| {
            let r = self.matrix(x)?;
            let zeta = tau_inv_extended(self.ret, &r)?;
            let a = self.f.gradient(&(zeta / self.h));
            let g9 = tau_inv_pullback(self.ret, &r, &a)?;
            let mut out = DVector::zeros(x.len());
            out.rows_mut(self.offset, 9).copy_from(&g9);
            Ok(out)
        })())
    }
}

/// Discrete optimal-control system on the Lie group SO(3) with
/// `L(g) = h l(tau^-1(g)/h)` and `phi^a(g) = h Psi^a(tau^-1(g)/h)`.
///
/// The fiber chart of the group uses the same retraction, so the Newton
/// unknown of a step is `h xi_{k+1}`.
pub fn optimal_control_system(
    ret: Retraction,
    l: Arc<dyn AlgebraFunction>,
    psi: Vec<Arc<dyn AlgebraFunction>>,
    h: f64,
) -> Result<ConstrainedSystem> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Configuration(format!("step size must be positive, got {h}")));
    }
    let model: Model = Arc::new(So3Group::new(ret));
    let basis = AlgebroidBasis::standard(&model);
    let lag: Field = Arc::new(RetractedField { ret, f: l, h, offset: 0 });
    let constraints: Vec<Field> = psi
        .into_iter()
        .map(|p| Arc::new(RetractedField { ret, f: p, h, offset: 0 }) as Field)
        .collect();
    ConstrainedSystem::new(format!("optimal-control[{}]", ret.name()), model, basis, lag, constraints)
}

/// Arrow `tau(h xi)` with multipliers, the Sigma_L point matching body velocity `xi`.
pub fn optimal_control_point(ret: Retraction, h: f64, xi: &Vector3<f64>, lambda: DVector<f64>) -> Result<SigmaPoint> {
    Ok(SigmaPoint::new(mat_to_vec(&ret.tau(&(xi * h))?), lambda))
}

/// Body velocity `tau^-1(g)/h` of an arrow.
pub fn body_velocity(ret: Retraction, h: f64, g: &DVector<f64>) -> Result<Vector3<f64>> {
    Ok(ret.tau_inv(&vec_to_mat(g.as_slice()))? / h)
}
