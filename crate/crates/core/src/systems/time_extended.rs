//! Time-dependent mechanics on `G_R = R x R x G => R x Q`.
//!
//! Elements are `(t0, t1, g)`; the algebroid basis is the time section
//! followed by the sections of the inner system.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::optimal_control::{tau_inv_extended, tau_inv_pullback};
use crate::del::{default_guess, del_residual, ConstrainedSystem, SigmaPoint};
use crate::error::{Error, Result};
use crate::field::{Field, ScalarField};
use crate::groupoid::{stack, AlgebroidBasis, Model, TimeExtendedGroupoid};
use crate::lie::{vec_to_mat, AlgebraFunction, Retraction};
use crate::newton::{self, NewtonOptions};
use crate::verification::SystemMorphism;

/// Variable-step optimal control on a Lie group: `L = H l(tau^-1(g)/H)` and
/// `phi^a = H Psi^a(tau^-1(g)/H)` with `H = t1 - t0`.
#[derive(Clone)]
pub struct AdaptiveRule {
    pub retraction: Retraction,
    pub cost: Arc<dyn AlgebraFunction>,
    pub constraints: Vec<Arc<dyn AlgebraFunction>>,
}

/// How consecutive times are related.
#[derive(Clone)]
pub enum StepRule {
    /// `t1 - t0 = h`.
    Fixed(f64),
    /// `t1 - t0 = h(g)` for a step-size function on `G`.
    Custom(Field),
    /// Step size solved for alongside the configuration.
    Adaptive(AdaptiveRule),
    /// No relation between the times; the flow is then underdetermined.
    Free,
}

impl fmt::Debug for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::Fixed(h) => write!(f, "Fixed({h})"),
            StepRule::Custom(_) => f.write_str("Custom"),
            StepRule::Adaptive(r) => write!(f, "Adaptive({})", r.retraction.name()),
            StepRule::Free => f.write_str("Free"),
        }
    }
}

/// A system on `G_R` together with the system on `G` it was built from.
#[derive(Debug, Clone)]
pub struct TimeExtendedSystem {
    pub system: ConstrainedSystem,
    pub inner: ConstrainedSystem,
    pub rule: StepRule,
}

/// `f(t0, t1, g) = inner(g)`.
struct Lifted(Field);

fn tail(x: &DVector<f64>) -> DVector<f64> {
    x.rows(2, x.len() - 2).into_owned()
}

fn pad(grad: DVector<f64>, dt0: f64, dt1: f64) -> DVector<f64> {
    stack(&DVector::from_vec(vec![dt0, dt1]), &grad)
}

impl ScalarField for Lifted {
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.0.value(&tail(x))
    }
    fn gradient(&self, x: &DVector<f64>) -> Option<Result<DVector<f64>>> {
        self.0.gradient(&tail(x)).map(|g| g.map(|g| pad(g, 0.0, 0.0)))
    }
}

/// `t1 - t0 - h(g)`.
struct StepConstraint {
    h: Field,
}

impl ScalarField for StepConstraint {
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(x[1] - x[0] - self.h.value(&tail(x))?)
    }
    fn gradient(&self, x: &DVector<f64>) -> Option<Result<DVector<f64>>> {
        self.h.gradient(&tail(x)).map(|g| g.map(|g| pad(-g, -1.0, 1.0)))
    }
}

/// `H f(tau^-1(R)/H)` on `(t0, t1, R)`.
struct AdaptiveField {
    ret: Retraction,
    f: Arc<dyn AlgebraFunction>,
}

impl AdaptiveField {
    fn parts(&self, x: &DVector<f64>) -> Result<(f64, Matrix3<f64>, Vector3<f64>)> {
        let dt = x[1] - x[0];
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step {dt:.3e} is not positive")));
        }
        let r = vec_to_mat(&x.as_slice()[2..11]);
        let zeta = tau_inv_extended(self.ret, &r)?;
        Ok((dt, r, zeta))
    }
}

impl ScalarField for AdaptiveField {
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let (dt, _, zeta) = self.parts(x)?;
        Ok(dt * self.f.value(&(zeta / dt)))
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<Result<DVector<f64>>> {
        Some((|| {
            let (dt, r, zeta) = self.parts(x)?;
            let xi = zeta / dt;
            let a = self.f.gradient(&xi);
            // d/dH [H f(zeta/H)] = f(xi) - <df(xi), xi>
            let e = self.f.value(&xi) - a.dot(&xi);
            Ok(pad(tau_inv_pullback(self.ret, &r, &a)?, -e, e))
        })())
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Configuration(format!("step size must be positive, got {h}")))
    }
}

/// Builds the system on `G_R` for `inner` and the given rule.
///
/// For [`StepRule::Adaptive`] the inner system only supplies the group; its
/// Lagrangian and constraints are replaced by the rule's cost and constraints.
pub fn time_extended(inner: &ConstrainedSystem, rule: StepRule) -> Result<TimeExtendedSystem> {
    let model: Model = Arc::new(TimeExtendedGroupoid::new(inner.model().clone()));
    let inner_basis = inner.basis().clone();
    let n = inner.n_a();
    let len = 2 + inner.model().coord_len();
    let basis = AlgebroidBasis::new(
        n + 1,
        move |q: &DVector<f64>| {
            let mut time = DVector::zeros(len);
            time[1] = 1.0;
            let qi = q.rows(1, q.len() - 1).into_owned();
            std::iter::once(time)
                .chain(inner_basis.tangents(&qi).into_iter().map(|v| pad(v, 0.0, 0.0)))
                .collect()
        },
        inner.gradient_mode(),
    );
    let (lagrangian, constraints, name): (Field, Vec<Field>, String) = match &rule {
        StepRule::Fixed(h) => {
            check_step(*h)?;
            let h = *h;
            let mut cs = lift_all(inner.constraints());
            cs.push(Arc::new(StepConstraint {
                h: crate::field::field_with_gradient(move |_| h, |g| DVector::zeros(g.len())),
            }));
            (Arc::new(Lifted(inner.lagrangian().clone())), cs, format!("{}[fixed]", inner.name()))
        }
        StepRule::Custom(hf) => {
            let mut cs = lift_all(inner.constraints());
            cs.push(Arc::new(StepConstraint { h: hf.clone() }));
            (Arc::new(Lifted(inner.lagrangian().clone())), cs, format!("{}[custom]", inner.name()))
        }
        StepRule::Free => (
            Arc::new(Lifted(inner.lagrangian().clone())),
            lift_all(inner.constraints()),
            format!("{}[free]", inner.name()),
        ),
        StepRule::Adaptive(a) => {
            let m = inner.model();
            if m.coord_len() != 9 || m.dim_q() != 0 {
                return Err(Error::Configuration(
                    "adaptive stepping needs a system on the rotation group".into(),
                ));
            }
            let l: Field = Arc::new(AdaptiveField { ret: a.retraction, f: a.cost.clone() });
            let cs = a
                .constraints
                .iter()
                .map(|p| Arc::new(AdaptiveField { ret: a.retraction, f: p.clone() }) as Field)
                .collect();
            (l, cs, format!("adaptive[{}]", a.retraction.name()))
        }
    };
    let mut system = ConstrainedSystem::new(name, model, basis, lagrangian, constraints)?;
    if matches!(rule, StepRule::Adaptive(_)) {
        system = system.with_predictor(Arc::new(fixed_step_predictor));
    }
    Ok(TimeExtendedSystem {
        system,
        inner: inner.clone(),
        rule,
    })
}

/// Solves every row except the time row with the previous step size held
/// fixed. Started from the raw previous increment, Newton on the full adaptive
/// system can land on the time-reversed step.
fn fixed_step_predictor(sys: &ConstrainedSystem, p_k: &SigmaPoint) -> Result<DVector<f64>> {
    let guess = default_guess(sys, p_k);
    let dt = guess[0];
    let n = guess.len();
    let n_a = sys.n_a();
    let f = |z: &DVector<f64>| -> Result<DVector<f64>> {
        let u = stack(&DVector::from_element(1, dt), &z.rows(0, n_a - 1).into_owned());
        let r = del_residual(sys, p_k, &u, &z.rows(n_a - 1, n - n_a).into_owned())?;
        Ok(r.rows(1, n - 1).into_owned())
    };
    match newton::solve(f, guess.rows(1, n - 1).into_owned(), &NewtonOptions::default()) {
        Ok(rep) => Ok(stack(&DVector::from_element(1, dt), &rep.x)),
        Err(_) => Ok(guess),
    }
}

fn lift_all(fields: &[Field]) -> Vec<Field> {
    fields.iter().map(|f| Arc::new(Lifted(f.clone())) as Field).collect()
}

/// `(t0, t1, g)` with multipliers.
pub fn time_point(t0: f64, t1: f64, g: &DVector<f64>, lambda: DVector<f64>) -> SigmaPoint {
    SigmaPoint::new(pad(g.clone(), t0, t1), lambda)
}

/// Discrete energy `l(xi) - <dl(xi), xi>` of an adaptive-step element, `xi = tau^-1(g)/(t1 - t0)`.
pub fn adaptive_energy(rule: &AdaptiveRule, g: &DVector<f64>) -> Result<f64> {
    let dt = g[1] - g[0];
    let zeta = tau_inv_extended(rule.retraction, &vec_to_mat(&g.as_slice()[2..11]))?;
    let xi = zeta / dt;
    Ok(rule.cost.value(&xi) - rule.cost.gradient(&xi).dot(&xi))
}

/// The projection `G_R -> G` forgetting both times.
///
/// Lifts place the reduced trajectory on the grid `t_start + k h` and append
/// a zero multiplier for the step constraint.
#[derive(Debug, Clone, Copy)]
pub struct TimeProjection {
    pub h: f64,
    pub t_start: f64,
    /// Rank of the inner algebroid.
    pub n_a: usize,
}

impl SystemMorphism for TimeProjection {
    fn map(&self, g: &DVector<f64>) -> DVector<f64> {
        tail(g)
    }
    fn map_base(&self, q: &DVector<f64>) -> DVector<f64> {
        q.rows(1, q.len() - 1).into_owned()
    }
    fn algebroid_map(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_a, self.n_a + 1);
        m.view_mut((0, 1), (self.n_a, self.n_a)).fill_with_identity();
        m
    }
    fn lift(&self, reduced: &[SigmaPoint]) -> Option<Vec<SigmaPoint>> {
        Some(
            reduced
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let t0 = self.t_start + k as f64 * self.h;
                    let t1 = self.t_start + (k + 1) as f64 * self.h;
                    time_point(t0, t1, &p.g, stack(&p.lambda, &DVector::zeros(1)))
                })
                .collect(),
        )
    }
}
