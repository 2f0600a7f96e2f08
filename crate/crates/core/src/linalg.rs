//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values of `a` in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(a);
    let Some(&max) = s.first() else { return 0 };
    if max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * max).count()
}

/// 2-norm condition number; infinite for singular or empty-rank matrices.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if min > 0.0 && s.len() == a.ncols().min(a.nrows()) => max / min,
        (None, None) => 1.0,
        _ => f64::INFINITY,
    }
}

/// Orthonormal basis (as columns) of the null space of `a`, using singular
/// values below `rel_tol * sigma_max` as the cut.
///
/// Rows are zero-padded to at least `ncols` so the full right-singular basis
/// is available for wide matrices.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let rows = a.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let max = svd.singular_values.iter().fold(0.0_f64, |m, &v| m.max(v));
    let cut = rel_tol * max;
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| max == 0.0 || s <= cut)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Central-difference Jacobian of `f` at `x`, with per-coordinate step
/// `step * max(1, |x_j|)`.
pub fn central_jacobian<F>(f: F, x: &DVector<f64>, step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut rows = None;
    for j in 0..n {
        let d = step * x[j].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += d;
        xm[j] -= d;
        let col = (f(&xp)? - f(&xm)?) / (2.0 * d);
        rows.get_or_insert(col.len());
        cols.push(col);
    }
    match rows {
        Some(_) => Ok(DMatrix::from_columns(&cols)),
        None => {
            let m = f(x)?.len();
            Ok(DMatrix::zeros(m, 0))
        }
    }
}

pub(crate) fn ensure_finite(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Evaluation(format!("{what} produced a non-finite value")))
    }
}

pub(crate) fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let k = null_space(&a, 1e-8);
        assert_eq!(k.ncols(), 2);
        assert!((&a * &k).norm() < 1e-14);
        let gram = k.transpose() * &k;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn null_space_of_empty_row_set_is_everything() {
        let a = DMatrix::<f64>::zeros(0, 4);
        assert_eq!(null_space(&a, 1e-8).ncols(), 4);
    }

    #[test]
    fn rank_and_condition() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(numerical_rank(&a, 1e-8), 1);
        assert!(condition_number(&a) > 1e12);
        let b = DMatrix::<f64>::identity(3, 3) * 2.0;
        assert!((condition_number(&b) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jacobian_of_linear_map_is_exact() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
        let f = |x: &DVector<f64>| Ok(&m * x);
        let j = central_jacobian(f, &DVector::from_vec(vec![0.3, -1.2, 4.0]), 1e-6).unwrap();
        assert!((j - &m).norm() < 1e-8);
    }
}
