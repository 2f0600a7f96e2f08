//! Morphisms of discrete constrained Lagrangian systems and reduction checks.

use nalgebra::{DMatrix, DVector};

use crate::del::{junction_residual, ConstrainedSystem, SigmaPoint, Trajectory};
use crate::error::Result;
use crate::groupoid::multiply;
use crate::linalg::max_abs;

/// A groupoid morphism `Phi: G -> G'` over `Phi0: Q -> Q'`, used to relate two systems.
pub trait SystemMorphism: Send + Sync {
    fn map(&self, g: &DVector<f64>) -> DVector<f64>;
    fn map_base(&self, q: &DVector<f64>) -> DVector<f64>;
    /// Matrix of `A Phi` at `q` from the source algebroid basis to the target basis (`n_a' x n_a`).
    fn algebroid_map(&self, q: &DVector<f64>) -> DMatrix<f64>;
    /// A preimage of a target-system trajectory, with multipliers, if one can be built.
    fn lift(&self, _reduced: &[SigmaPoint]) -> Option<Vec<SigmaPoint>> {
        None
    }
}

/// Sample-based defects of the morphism axioms.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphismReport {
    /// `Phi(gh) = Phi(g) Phi(h)`.
    pub homomorphism: f64,
    /// `alpha' o Phi = Phi0 o alpha` and likewise for `beta`.
    pub base_compatibility: f64,
    /// `L = L' o Phi` on `N`.
    pub lagrangian: f64,
    /// `phi'(Phi(g))` for `g` in `N`.
    pub constraint_pullback: f64,
}

impl MorphismReport {
    pub fn max_defect(&self) -> f64 {
        self.homomorphism
            .max(self.base_compatibility)
            .max(self.lagrangian)
            .max(self.constraint_pullback)
    }
}

/// Evaluates the morphism axioms on composable `pairs` and on `points` of `N`.
pub fn check_morphism(
    morph: &dyn SystemMorphism,
    sys: &ConstrainedSystem,
    target: &ConstrainedSystem,
    pairs: &[(DVector<f64>, DVector<f64>)],
    points: &[DVector<f64>],
) -> Result<MorphismReport> {
    let g_model = sys.model();
    let t_model = target.model();
    let mut rep = MorphismReport {
        homomorphism: 0.0,
        base_compatibility: 0.0,
        lagrangian: 0.0,
        constraint_pullback: 0.0,
    };
    for (g, h) in pairs {
        let gh = multiply(g_model.as_ref(), g, h)?;
        let lhs = morph.map(&gh);
        let rhs = t_model.compose(&morph.map(g), &morph.map(h));
        rep.homomorphism = rep.homomorphism.max((lhs - rhs).amax());
        for x in [g, h] {
            let pg = morph.map(x);
            let a = (t_model.source(&pg) - morph.map_base(&g_model.source(x))).amax();
            let b = (t_model.target(&pg) - morph.map_base(&g_model.target(x))).amax();
            rep.base_compatibility = rep.base_compatibility.max(a).max(b);
        }
    }
    for g in points {
        let pg = morph.map(g);
        let dl = (sys.lagrangian().value(g)? - target.lagrangian().value(&pg)?).abs();
        rep.lagrangian = rep.lagrangian.max(dl);
        rep.constraint_pullback = rep.constraint_pullback.max(max_abs(&target.constraint_values(&pg)?));
    }
    Ok(rep)
}

/// Defect of the relation `F^+- L(p) = (A Phi)^T F^+- L'(p')` between Sigma_L points.
pub fn phi_star_defect(
    morph: &dyn SystemMorphism,
    sys: &ConstrainedSystem,
    target: &ConstrainedSystem,
    p: &SigmaPoint,
    p_target: &SigmaPoint,
) -> Result<f64> {
    let pairs = [
        (crate::del::legendre_minus(sys, p)?, crate::del::legendre_minus(target, p_target)?),
        (crate::del::legendre_plus(sys, p)?, crate::del::legendre_plus(target, p_target)?),
    ];
    let mut worst: f64 = 0.0;
    for (mine, theirs) in pairs {
        let base = (morph.map_base(&mine.base) - &theirs.base).amax();
        let pulled = morph.algebroid_map(&mine.base).transpose() * &theirs.components;
        worst = worst.max(base).max((mine.components - pulled).amax());
    }
    Ok(worst)
}

/// Result of lifting a reduced trajectory and evaluating the full DEL equations on it.
#[derive(Debug, Clone, PartialEq)]
pub enum ReductionOutcome {
    /// Max-norm DEL residual of the lifted trajectory over all junctions.
    Residual(f64),
    /// No lift could be constructed.
    Inconclusive(String),
}

/// Lifts `reduced` (a trajectory of `target`) through `morph` and returns the
/// largest DEL residual of the lift as a trajectory of `sys`.
pub fn morphism_reduction_check(
    morph: &dyn SystemMorphism,
    sys: &ConstrainedSystem,
    target: &ConstrainedSystem,
    reduced: &Trajectory,
) -> Result<ReductionOutcome> {
    let Some(lifted) = morph.lift(&reduced.points) else {
        return Ok(ReductionOutcome::Inconclusive("no lift available".into()));
    };
    if lifted.len() != reduced.points.len() {
        return Ok(ReductionOutcome::Inconclusive("lift changed the trajectory length".into()));
    }
    for (l, r) in lifted.iter().zip(&reduced.points) {
        if (morph.map(&l.g) - &r.g).amax() > 1e-9 {
            return Ok(ReductionOutcome::Inconclusive("lift is not a preimage".into()));
        }
        if sys.validate(l).is_err() || target.validate(r).is_err() {
            return Ok(ReductionOutcome::Inconclusive("lift leaves the constraint set".into()));
        }
    }
    let mut worst: f64 = 0.0;
    for w in lifted.windows(2) {
        worst = worst.max(max_abs(&junction_residual(sys, &w[0], &w[1])?));
    }
    Ok(ReductionOutcome::Residual(worst))
}

/// The identity morphism of a system.
#[derive(Debug, Clone, Copy)]
pub struct IdentityMorphism {
    pub n_a: usize,
}

impl SystemMorphism for IdentityMorphism {
    fn map(&self, g: &DVector<f64>) -> DVector<f64> {
        g.clone()
    }
    fn map_base(&self, q: &DVector<f64>) -> DVector<f64> {
        q.clone()
    }
    fn algebroid_map(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.n_a, self.n_a)
    }
    fn lift(&self, reduced: &[SigmaPoint]) -> Option<Vec<SigmaPoint>> {
        Some(reduced.to_vec())
    }
}
