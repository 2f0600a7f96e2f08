//! Jacobian analysis of the discrete Legendre transforms on `Sigma_L`.

use nalgebra::{DMatrix, DVector};

use super::{ConstrainedSystem, SigmaPoint};
use crate::error::{Error, Result};
use crate::groupoid::{chart_point, from_chart_point, stack};
use crate::linalg::{central_jacobian, condition_number, max_abs, null_space, numerical_rank};

/// Relative singular-value threshold for kernel dimensions.
pub const RANK_TOL: f64 = 1e-8;

/// Ranks and kernel dimensions of `T F^- L` and `T F^+ L` at a point.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// `dim G`, the size of both Jacobians.
    pub dim: usize,
    pub rank_minus: usize,
    pub rank_plus: usize,
    pub ker_dim_minus: usize,
    pub ker_dim_plus: usize,
    pub cond_minus: f64,
    pub cond_plus: f64,
    pub jac_minus: DMatrix<f64>,
    pub jac_plus: DMatrix<f64>,
}

impl RegularityReport {
    pub fn kernels_equal(&self) -> bool {
        self.ker_dim_minus == self.ker_dim_plus
    }

    pub fn is_regular(&self) -> bool {
        self.ker_dim_minus == 0 && self.ker_dim_plus == 0
    }
}

/// Jacobians of `F^+- L` in `Sigma_L` coordinates `(s, lambda)`, where `s`
/// runs over an orthonormal basis of `ker d phi(g)` in global chart coordinates.
pub fn regularity_report(sys: &ConstrainedSystem, p: &SigmaPoint) -> Result<RegularityReport> {
    sys.validate(p)?;
    let model = sys.model();
    let x0 = chart_point(model.as_ref(), &p.g)?;
    let dim = x0.len();
    let m = sys.m();

    let tangent = central_jacobian(|x| from_chart_point(model.as_ref(), x), &x0, 1e-6)?;
    let cols: Vec<DVector<f64>> = tangent.column_iter().map(|c| c.into_owned()).collect();
    let c = sys.constraint_pairings(&p.g, &cols)?;
    let k = null_space(&c, RANK_TOL);
    if k.ncols() + m != dim {
        return Err(Error::Domain(format!(
            "constraint differentials are dependent (kernel {} of expected {})",
            k.ncols(),
            dim - m
        )));
    }
    let ns = k.ncols();
    let point_at = |y: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>)> {
        let s = y.rows(0, ns).into_owned();
        let g = from_chart_point(model.as_ref(), &(&x0 + &k * s))?;
        let lam = &p.lambda + y.rows(ns, m);
        Ok((g, lam))
    };
    let y0 = DVector::zeros(dim);
    let jac_minus = central_jacobian(
        |y| {
            let (g, lam) = point_at(y)?;
            let cv = sys.minus_unchecked(&g, &lam)?;
            Ok(stack(&cv.base, &cv.components))
        },
        &y0,
        1e-6,
    )?;
    let jac_plus = central_jacobian(
        |y| {
            let (g, lam) = point_at(y)?;
            let cv = sys.plus_unchecked(&g, &lam)?;
            Ok(stack(&cv.base, &cv.components))
        },
        &y0,
        1e-6,
    )?;
    Ok(RegularityReport {
        dim,
        rank_minus: numerical_rank(&jac_minus, RANK_TOL),
        rank_plus: numerical_rank(&jac_plus, RANK_TOL),
        ker_dim_minus: null_space(&jac_minus, RANK_TOL).ncols(),
        ker_dim_plus: null_space(&jac_plus, RANK_TOL).ncols(),
        cond_minus: condition_number(&jac_minus),
        cond_plus: condition_number(&jac_plus),
        jac_minus,
        jac_plus,
    })
}

/// Moves `g` onto `N` by minimum-norm Gauss–Newton steps in global chart coordinates.
pub fn project_to_constraints(sys: &ConstrainedSystem, g: &DVector<f64>) -> Result<DVector<f64>> {
    if sys.m() == 0 {
        return Ok(g.clone());
    }
    let model = sys.model();
    let mut x = chart_point(model.as_ref(), g)?;
    let phi = |x: &DVector<f64>| sys.constraint_values(&from_chart_point(model.as_ref(), x)?);
    let mut r = phi(&x)?;
    for _ in 0..50 {
        if max_abs(&r) <= 1e-13 {
            return from_chart_point(model.as_ref(), &x);
        }
        let c = central_jacobian(phi, &x, 1e-7)?;
        let pinv = c
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Evaluation(format!("pseudo-inverse failed: {e}")))?;
        x -= pinv * &r;
        r = phi(&x)?;
    }
    if max_abs(&r) <= 1e-11 {
        return from_chart_point(model.as_ref(), &x);
    }
    Err(Error::Solver {
        iterations: 50,
        residual: max_abs(&r),
    })
}
