//! Numerical checks of variational criticality, Noether symmetries and reduction.

mod morphism;

pub use morphism::{
    check_morphism, morphism_reduction_check, phi_star_defect, IdentityMorphism, MorphismReport, ReductionOutcome,
    SystemMorphism,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::del::{ConstrainedSystem, SigmaPoint, Trajectory};
use crate::error::{Error, Result};
use crate::groupoid::{left_invariant, right_invariant, COMPOSABLE_TOL};
use crate::linalg::null_space;

/// Relative singular-value threshold for null-space membership.
pub const NULL_TOL: f64 = 1e-8;

/// Admissible variations at a junction: algebroid vectors `v` at `base` with
/// `v->(g1)` tangent to `N` at `g1` and `v<-(g2)` tangent to `N` at `g2`.
#[derive(Debug, Clone)]
pub struct VariationSpace {
    pub base: DVector<f64>,
    /// Orthonormal columns in algebroid-basis coordinates (`n_a x dim`).
    pub basis_matrix: DMatrix<f64>,
}

impl VariationSpace {
    pub fn dim(&self) -> usize {
        self.basis_matrix.ncols()
    }
}

fn check_junction(sys: &ConstrainedSystem, g1: &DVector<f64>, g2: &DVector<f64>) -> Result<DVector<f64>> {
    let model = sys.model();
    let q = model.target(g1);
    let gap = (&q - model.source(g2)).amax();
    if gap > COMPOSABLE_TOL {
        return Err(Error::Domain(format!("non-composable junction (base mismatch {gap:.3e})")));
    }
    Ok(q)
}

/// Null space of the stacked rows `d phi^a(g1) . X_i<-(g1)` and `d phi^a(g2) . X_i->(g2)`.
pub fn variation_space(sys: &ConstrainedSystem, g1: &DVector<f64>, g2: &DVector<f64>) -> Result<VariationSpace> {
    let q = check_junction(sys, g1, g2)?;
    let n_a = sys.n_a();
    let m = sys.m();
    let top = sys.constraint_pairings(g1, &sys.left_fields(g1)?)?;
    let bottom = sys.constraint_pairings(g2, &sys.right_fields(g2)?)?;
    let mut rows = DMatrix::zeros(2 * m, n_a);
    rows.view_mut((0, 0), (m, n_a)).copy_from(&top);
    rows.view_mut((m, 0), (m, n_a)).copy_from(&bottom);
    Ok(VariationSpace {
        base: q,
        basis_matrix: null_space(&rows, NULL_TOL),
    })
}

/// Largest `|v<-[L](g_k) - v->[L](g_{k+1})|` over unit variations at junction `k`
/// (between `points[k]` and `points[k + 1]`).
pub fn action_criticality(sys: &ConstrainedSystem, traj: &Trajectory, k: usize) -> Result<f64> {
    if k + 1 >= traj.points.len() {
        return Err(Error::Configuration(format!(
            "junction {k} out of range for {} points",
            traj.points.len()
        )));
    }
    let g1 = &traj.points[k].g;
    let g2 = &traj.points[k + 1].g;
    criticality_at(sys, g1, g2)
}

/// Criticality defect of the pair `(g1, g2)`.
pub fn criticality_at(sys: &ConstrainedSystem, g1: &DVector<f64>, g2: &DVector<f64>) -> Result<f64> {
    let space = variation_space(sys, g1, g2)?;
    let model = sys.model();
    let zero = DVector::zeros(sys.m());
    let mut worst: f64 = 0.0;
    for col in space.basis_matrix.column_iter() {
        let v = sys.basis().combine(&space.base, &col.into_owned());
        let wl = left_invariant(model.as_ref(), &v, g1)?;
        let wr = right_invariant(model.as_ref(), &v, g2)?;
        let a = sys.augmented_pairings(g1, &zero, std::slice::from_ref(&wl))?[0];
        let b = sys.augmented_pairings(g2, &zero, std::slice::from_ref(&wr))?[0];
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Max criticality defect over all junctions of a trajectory.
pub fn max_action_criticality(sys: &ConstrainedSystem, traj: &Trajectory) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..traj.points.len().saturating_sub(1) {
        worst = worst.max(action_criticality(sys, traj, k)?);
    }
    Ok(worst)
}

type SectionFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type GaugeFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;

/// Candidate Noether symmetry: a section `X` (coefficients in the algebroid basis) and a gauge `f` on `Q`.
#[derive(Clone)]
pub struct NoetherCandidate {
    pub section: Arc<SectionFn>,
    pub f: Arc<GaugeFn>,
}

impl fmt::Debug for NoetherCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NoetherCandidate")
    }
}

impl NoetherCandidate {
    pub fn new<S, F>(section: S, f: F) -> Self
    where
        S: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        Self {
            section: Arc::new(section),
            f: Arc::new(f),
        }
    }

    /// Constant coefficients `c` with zero gauge.
    pub fn constant(c: DVector<f64>) -> Self {
        Self::new(move |_| c.clone(), |_| 0.0)
    }
}

/// `F_X(p) = <F^- L(p), X(alpha(g))> + f(alpha(g))`.
pub fn momentum(sys: &ConstrainedSystem, cand: &NoetherCandidate, p: &SigmaPoint) -> Result<f64> {
    let minus = crate::del::legendre_minus(sys, p)?;
    Ok(minus.components.dot(&(cand.section)(&minus.base)) + (cand.f)(&minus.base))
}

/// Largest violation of `<F^- L, X> + f(alpha) = <F^+ L, X> + f(beta)` over the samples.
pub fn noether_check(sys: &ConstrainedSystem, cand: &NoetherCandidate, samples: &[SigmaPoint]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in samples {
        let minus = crate::del::legendre_minus(sys, p)?;
        let plus = crate::del::legendre_plus(sys, p)?;
        let lhs = minus.components.dot(&(cand.section)(&minus.base)) + (cand.f)(&minus.base);
        let rhs = plus.components.dot(&(cand.section)(&plus.base)) + (cand.f)(&plus.base);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
