//! Matrix Lie group numerics for SO(3).
//!
//! Algebra elements are stored as coordinate vectors in the basis
//! `E1, E2, E3` of `so(3)`; covectors use the dual basis so the pairing is
//! the plain dot product.

mod poisson;

pub use poisson::{
    lie_poisson_momentum, lie_poisson_run, lie_poisson_step, AffinePin, AlgebraFunction, LiePoissonForm, LiePoissonState,
    QuadraticCost,
};

use std::f64::consts::PI;

use nalgebra::{DVector, Matrix3, Vector3};

use crate::error::{Error, Result};

/// Element of `so(3)` in the `E_i` basis.
pub type AlgebraVector = Vector3<f64>;
/// Element of `so(3)*` in the dual basis.
pub type CoAlgebraVector = Vector3<f64>;

/// Hat map `R^3 -> so(3)`.
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`hat`]; rejects matrices whose asymmetry part exceeds `1e-8`.
pub fn vee(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let sym = (m + m.transpose()).amax();
    if sym > 1e-8 {
        return Err(Error::Domain(format!("vee of a non-antisymmetric matrix (defect {sym:.3e})")));
    }
    Ok(vee_skew(m))
}

/// `vee` of the antisymmetric part of `m`.
pub fn vee_skew(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Basis element `E_i` (zero-based).
pub fn basis_element(i: usize) -> Matrix3<f64> {
    let mut w = Vector3::zeros();
    w[i] = 1.0;
    hat(&w)
}

/// Cayley map `(I - X/2)^-1 (I + X/2)` with `X = hat(xi)`.
pub fn cay(xi: &Vector3<f64>) -> Result<Matrix3<f64>> {
    if !xi.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("cay of a non-finite vector".into()));
    }
    let x = hat(xi);
    let id = Matrix3::identity();
    let lhs = id - x * 0.5;
    let inv = lhs
        .try_inverse()
        .ok_or_else(|| Error::Domain("I - xi/2 is singular".into()))?;
    Ok(inv * (id + x * 0.5))
}

/// Inverse Cayley map `2 (R - I)(R + I)^-1`, returned as a full matrix.
///
/// For orthogonal `R` the result is antisymmetric; off the group it is the
/// natural smooth extension.
pub fn cay_inv_matrix(r: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let id = Matrix3::identity();
    let inv = (r + id)
        .try_inverse()
        .ok_or_else(|| Error::Domain("R + I is singular (rotation by pi)".into()))?;
    Ok((r - id) * inv * 2.0)
}

/// Rodrigues formula for `exp(hat(xi))`.
pub fn exp_so3(xi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = xi.norm();
    let x = hat(xi);
    let (a, b) = if theta < 1e-4 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Matrix3::identity() + x * a + x * x * b
}

/// Principal logarithm of a rotation, as algebra coordinates.
///
/// Fails when the rotation angle is within `1e-6` of `pi`.
pub fn log_so3(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let c = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = c.acos();
    if theta >= PI - 1e-6 {
        return Err(Error::Domain(format!("log of a rotation by {theta:.6} (branch ambiguity)")));
    }
    let w = vee_skew(r);
    let s = w.norm();
    if theta < 1e-4 {
        // series of asin(s)/s
        let t2 = s * s;
        return Ok(w * (1.0 + t2 / 6.0 + 3.0 * t2 * t2 / 40.0));
    }
    Ok(w * (theta / theta.sin()))
}

/// Nearest rotation to `m` (orthogonal polar factor).
pub fn polar_rotation(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let svd = m.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Evaluation("SVD failed".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Evaluation("SVD failed".into()))?;
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    Ok(u * d * v_t)
}

/// Retraction `tau: so(3) -> SO(3)` used to build discrete Lagrangians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Retraction {
    Exp,
    Cay,
}

impl Retraction {
    pub fn name(&self) -> &'static str {
        match self {
            Retraction::Exp => "exp",
            Retraction::Cay => "cay",
        }
    }

    pub fn tau(&self, xi: &Vector3<f64>) -> Result<Matrix3<f64>> {
        match self {
            Retraction::Exp => Ok(exp_so3(xi)),
            Retraction::Cay => cay(xi),
        }
    }

    pub fn tau_inv(&self, r: &Matrix3<f64>) -> Result<Vector3<f64>> {
        match self {
            Retraction::Exp => log_so3(r),
            Retraction::Cay => Ok(vee_skew(&cay_inv_matrix(r)?)),
        }
    }

    /// Matrix of the left-trivialized inverse tangent `dtau^-1_xi` in the
    /// `E_i` basis.
    pub fn dtau_inv_matrix(&self, xi: &Vector3<f64>) -> Result<Matrix3<f64>> {
        match self {
            Retraction::Cay => Ok(dcay_inv_matrix(xi)),
            Retraction::Exp => {
                if xi.norm() < 1.0 {
                    Ok(dexp_inv_series(xi))
                } else {
                    dtau_inv_fd_matrix(*self, xi)
                }
            }
        }
    }

    /// `dtau^-1_xi (eta)`.
    pub fn dtau_inv(&self, xi: &Vector3<f64>, eta: &Vector3<f64>) -> Result<Vector3<f64>> {
        Ok(self.dtau_inv_matrix(xi)? * eta)
    }
}

/// `dcay^-1_xi (eta) = (I + X/2) H (I - X/2)` in matrix form.
fn dcay_inv_matrix(xi: &Vector3<f64>) -> Matrix3<f64> {
    let x = hat(xi);
    let id = Matrix3::identity();
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        let col = vee_skew(&((id + x * 0.5) * basis_element(i) * (id - x * 0.5)));
        out.set_column(i, &col);
    }
    out
}

/// Truncated Bernoulli series `sum B_k^+ / k! ad^k` through `ad^8`.
fn dexp_inv_series(xi: &Vector3<f64>) -> Matrix3<f64> {
    let ad = hat(xi);
    let ad2 = ad * ad;
    let ad4 = ad2 * ad2;
    let ad6 = ad4 * ad2;
    let ad8 = ad4 * ad4;
    Matrix3::identity() + ad * 0.5 + ad2 / 12.0 - ad4 / 720.0 + ad6 / 30240.0 - ad8 / 1209600.0
}

/// Closed form of the left-trivialized `dexp^-1` on `so(3)`.
pub fn dexp_inv_closed(xi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = xi.norm();
    let ad = hat(xi);
    let coef = if theta < 1e-3 {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let half = 0.5 * theta;
        (1.0 - half * half.cos() / half.sin()) / (theta * theta)
    };
    Matrix3::identity() + ad * 0.5 + ad * ad * coef
}

/// `dtau^-1_xi` from the defining relation `T tau = T l_tau(xi) o dtau`,
/// by central differences of `tau`.
fn dtau_inv_fd_matrix(ret: Retraction, xi: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let d = 1e-6;
    let g = ret.tau(xi)?;
    let gt = g.transpose();
    let mut dtau = Matrix3::zeros();
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = d;
        let deriv = (ret.tau(&(xi + e))? - ret.tau(&(xi - e))?) / (2.0 * d);
        dtau.set_column(i, &vee_skew(&(gt * deriv)));
    }
    dtau.try_inverse()
        .ok_or_else(|| Error::Domain("retraction tangent is singular".into()))
}

/// Coadjoint action defined by `<Ad*_g mu, E_i> = <mu, vee(g E_i g^-1)>`.
pub fn coadjoint(g: &Matrix3<f64>, mu: &Vector3<f64>) -> Result<Vector3<f64>> {
    let inv = g
        .try_inverse()
        .ok_or_else(|| Error::Domain("coadjoint action by a singular matrix".into()))?;
    let mut out = Vector3::zeros();
    for i in 0..3 {
        out[i] = mu.dot(&vee_skew(&(g * basis_element(i) * inv)));
    }
    Ok(out)
}

/// Row-major flattening of a 3x3 matrix.
pub fn mat_to_vec(m: &Matrix3<f64>) -> DVector<f64> {
    DVector::from_iterator(9, m.transpose().iter().copied())
}

/// Inverse of [`mat_to_vec`] on a slice of nine entries.
pub fn vec_to_mat(v: &[f64]) -> Matrix3<f64> {
    Matrix3::from_row_slice(&v[..9])
}

/// Largest entry of `R^T R - I` together with `|det R - 1|`.
pub fn orthogonality_defect(r: &Matrix3<f64>) -> f64 {
    let d = (r.transpose() * r - Matrix3::identity()).amax();
    d.max((r.determinant() - 1.0).abs())
}
