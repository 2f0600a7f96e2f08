//! Constrained discrete Euler–Lagrange dynamics on a groupoid.
//!
//! A point of the Lagrangian submanifold `Sigma_L` is stored as `(g, lambda)`,
//! representing the covector `d(L + lambda . phi)(g)` with `g` in the
//! constraint set `N = {phi = 0}`.

mod regularity;

pub use regularity::{project_to_constraints, regularity_report, RegularityReport};

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{directional_derivative, Field, GradientMode};
use crate::groupoid::{left_invariant, right_invariant, stack, AlgebroidBasis, Model, COMPOSABLE_TOL};
use crate::linalg::max_abs;
use crate::newton::{self, NewtonOptions};

/// Constraint violation above which `g` is not considered a point of `N`.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Initial Newton guess `(u, lambda_next)` for a step from the given point.
pub type Predictor = Arc<dyn Fn(&ConstrainedSystem, &SigmaPoint) -> Result<DVector<f64>> + Send + Sync>;

/// A discrete constrained Lagrangian system `(G, N, L)`.
#[derive(Clone)]
pub struct ConstrainedSystem {
    name: String,
    model: Model,
    basis: AlgebroidBasis,
    lagrangian: Field,
    constraints: Vec<Field>,
    predictor: Option<Predictor>,
}

impl fmt::Debug for ConstrainedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstrainedSystem")
            .field("name", &self.name)
            .field("model", &self.model.name())
            .field("n_a", &self.basis.n_a())
            .field("m", &self.constraints.len())
            .finish()
    }
}

/// `(g, lambda)` coordinates of a point of `Sigma_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPoint {
    pub g: DVector<f64>,
    pub lambda: DVector<f64>,
}

impl SigmaPoint {
    pub fn new(g: DVector<f64>, lambda: DVector<f64>) -> Self {
        Self { g, lambda }
    }
}

/// An element of `A*G`: components in the algebroid basis at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    pub base: DVector<f64>,
    pub components: DVector<f64>,
}

impl Covector {
    /// Largest difference in base point or components.
    pub fn distance(&self, other: &Covector) -> f64 {
        (&self.base - &other.base).amax().max((&self.components - &other.components).amax())
    }
}

impl ConstrainedSystem {
    pub fn new(
        name: impl Into<String>,
        model: Model,
        basis: AlgebroidBasis,
        lagrangian: Field,
        constraints: Vec<Field>,
    ) -> Result<Self> {
        if basis.n_a() != model.fiber_dim() {
            return Err(Error::Configuration(format!(
                "basis rank {} does not match algebroid rank {}",
                basis.n_a(),
                model.fiber_dim()
            )));
        }
        if constraints.len() > model.fiber_dim() + model.dim_q() {
            return Err(Error::Configuration(format!(
                "{} constraints exceed dim G = {}",
                constraints.len(),
                model.fiber_dim() + model.dim_q()
            )));
        }
        Ok(Self {
            name: name.into(),
            model,
            basis,
            lagrangian,
            constraints,
            predictor: None,
        })
    }

    /// System on `model` with its standard basis and no constraints.
    pub fn unconstrained(name: impl Into<String>, model: Model, lagrangian: Field) -> Result<Self> {
        let basis = AlgebroidBasis::standard(&model);
        Self::new(name, model, basis, lagrangian, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn model(&self) -> &Model {
        &self.model
    }
    pub fn basis(&self) -> &AlgebroidBasis {
        &self.basis
    }
    pub fn lagrangian(&self) -> &Field {
        &self.lagrangian
    }
    pub fn constraints(&self) -> &[Field] {
        &self.constraints
    }
    pub fn n_a(&self) -> usize {
        self.basis.n_a()
    }
    pub fn m(&self) -> usize {
        self.constraints.len()
    }
    /// `dim G = dim Q + n_a`.
    pub fn dim(&self) -> usize {
        self.model.dim_q() + self.n_a()
    }

    /// Same system expressed in another basis of sections.
    pub fn with_basis(mut self, basis: AlgebroidBasis) -> Result<Self> {
        if basis.n_a() != self.n_a() {
            return Err(Error::Configuration("basis rank mismatch".into()));
        }
        self.basis = basis;
        Ok(self)
    }

    pub fn with_gradient_mode(mut self, mode: GradientMode) -> Self {
        self.basis.gradient_mode = mode;
        self
    }

    /// Replaces [`default_guess`] for steps taken without an explicit guess.
    pub fn with_predictor(mut self, predictor: Predictor) -> Self {
        self.predictor = Some(predictor);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn gradient_mode(&self) -> GradientMode {
        self.basis.gradient_mode
    }

    pub fn constraint_values(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.m());
        for (i, c) in self.constraints.iter().enumerate() {
            out[i] = c.value(g)?;
        }
        Ok(out)
    }

    /// Builds a validated Sigma_L point.
    pub fn sigma_point(&self, g: DVector<f64>, lambda: DVector<f64>) -> Result<SigmaPoint> {
        let p = SigmaPoint::new(g, lambda);
        self.validate(&p)?;
        Ok(p)
    }

    /// Checks shapes and membership of `p.g` in `N`.
    pub fn validate(&self, p: &SigmaPoint) -> Result<()> {
        if p.g.len() != self.model.coord_len() {
            return Err(Error::Domain(format!(
                "element has {} coordinates, model expects {}",
                p.g.len(),
                self.model.coord_len()
            )));
        }
        if p.lambda.len() != self.m() {
            return Err(Error::Domain(format!("{} multipliers for {} constraints", p.lambda.len(), self.m())));
        }
        let v = max_abs(&self.constraint_values(&p.g)?);
        if !(v < CONSTRAINT_TOL) {
            return Err(Error::Domain(format!("constraint violation {v:.3e} exceeds {CONSTRAINT_TOL:.0e}")));
        }
        Ok(())
    }

    /// `d(L + lambda . phi)(g) . w` for each tangent vector in `ws`.
    pub fn augmented_pairings(&self, g: &DVector<f64>, lambda: &DVector<f64>, ws: &[DVector<f64>]) -> Result<DVector<f64>> {
        let mode = self.gradient_mode();
        if mode == GradientMode::UserSupplied {
            if let Some(grad) = self.augmented_gradient(g, lambda)? {
                return Ok(DVector::from_iterator(ws.len(), ws.iter().map(|w| grad.dot(w))));
            }
        }
        let mut out = DVector::zeros(ws.len());
        for (i, w) in ws.iter().enumerate() {
            let mut acc = directional_derivative(self.lagrangian.as_ref(), g, w, mode)?;
            for (c, &lam) in self.constraints.iter().zip(lambda.iter()) {
                if lam != 0.0 {
                    acc += lam * directional_derivative(c.as_ref(), g, w, mode)?;
                }
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Analytic gradient of `L + lambda . phi`, when every field supplies one.
    fn augmented_gradient(&self, g: &DVector<f64>, lambda: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        let Some(grad) = self.lagrangian.gradient(g) else {
            return Ok(None);
        };
        let mut acc = grad?;
        for (c, &lam) in self.constraints.iter().zip(lambda.iter()) {
            match c.gradient(g) {
                Some(cg) => acc += cg? * lam,
                None => return Ok(None),
            }
        }
        if acc.iter().all(|v| v.is_finite()) {
            Ok(Some(acc))
        } else {
            Err(Error::Evaluation("gradient is not finite".into()))
        }
    }

    /// Rows `d phi^a(g) . w_j` as an `m x ws.len()` matrix.
    pub fn constraint_pairings(&self, g: &DVector<f64>, ws: &[DVector<f64>]) -> Result<DMatrix<f64>> {
        let mode = self.gradient_mode();
        let mut out = DMatrix::zeros(self.m(), ws.len());
        for (a, c) in self.constraints.iter().enumerate() {
            let grad = if mode == GradientMode::UserSupplied { c.gradient(g) } else { None };
            match grad {
                Some(gr) => {
                    let gr = gr?;
                    for (j, w) in ws.iter().enumerate() {
                        out[(a, j)] = gr.dot(w);
                    }
                }
                None => {
                    for (j, w) in ws.iter().enumerate() {
                        out[(a, j)] = directional_derivative(c.as_ref(), g, w, mode)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Right-invariant basis fields at `g`.
    pub fn right_fields(&self, g: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        let q = self.model.source(g);
        self.basis
            .vectors(&q)
            .iter()
            .map(|x| right_invariant(self.model.as_ref(), x, g))
            .collect()
    }

    /// Left-invariant basis fields at `g`.
    pub fn left_fields(&self, g: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        let q = self.model.target(g);
        self.basis
            .vectors(&q)
            .iter()
            .map(|x| left_invariant(self.model.as_ref(), x, g))
            .collect()
    }

    pub(crate) fn minus_unchecked(&self, g: &DVector<f64>, lambda: &DVector<f64>) -> Result<Covector> {
        let ws = self.right_fields(g)?;
        Ok(Covector {
            base: self.model.source(g),
            components: self.augmented_pairings(g, lambda, &ws)?,
        })
    }

    pub(crate) fn plus_unchecked(&self, g: &DVector<f64>, lambda: &DVector<f64>) -> Result<Covector> {
        let ws = self.left_fields(g)?;
        Ok(Covector {
            base: self.model.target(g),
            components: self.augmented_pairings(g, lambda, &ws)?,
        })
    }
}

/// Discrete Legendre transform `F^- L`: base `alpha(g)`, components `X_i->[L + lambda . phi](g)`
/// along the right-invariant fields.
pub fn legendre_minus(sys: &ConstrainedSystem, p: &SigmaPoint) -> Result<Covector> {
    sys.validate(p)?;
    sys.minus_unchecked(&p.g, &p.lambda)
}

/// Discrete Legendre transform `F^+ L`: base `beta(g)`, components along the left-invariant fields.
pub fn legendre_plus(sys: &ConstrainedSystem, p: &SigmaPoint) -> Result<Covector> {
    sys.validate(p)?;
    sys.plus_unchecked(&p.g, &p.lambda)
}

/// DEL equations between two consecutive points, without membership checks:
/// `F^+ L(p_k) - F^- L(p_next)` followed by `phi(g_next)`.
pub fn junction_residual(sys: &ConstrainedSystem, p_k: &SigmaPoint, p_next: &SigmaPoint) -> Result<DVector<f64>> {
    let model = sys.model();
    let gap = (model.target(&p_k.g) - model.source(&p_next.g)).amax();
    if gap > COMPOSABLE_TOL {
        return Err(Error::Domain(format!("non-composable junction (base mismatch {gap:.3e})")));
    }
    let plus = sys.plus_unchecked(&p_k.g, &p_k.lambda)?;
    residual_against(sys, &plus.components, &p_next.g, &p_next.lambda)
}

fn residual_against(
    sys: &ConstrainedSystem,
    plus: &DVector<f64>,
    g_next: &DVector<f64>,
    lambda_next: &DVector<f64>,
) -> Result<DVector<f64>> {
    let minus = sys.minus_unchecked(g_next, lambda_next)?;
    Ok(stack(&(plus - minus.components), &sys.constraint_values(g_next)?))
}

/// DEL residual in the Newton unknowns `(u, lambda_next)`, with
/// `g_next = fiber_chart(beta(g_k), u)`.
pub fn del_residual(
    sys: &ConstrainedSystem,
    p_k: &SigmaPoint,
    u: &DVector<f64>,
    lambda_next: &DVector<f64>,
) -> Result<DVector<f64>> {
    let g_next = sys.model().fiber_chart(&sys.model().target(&p_k.g), u)?;
    let plus = sys.plus_unchecked(&p_k.g, &p_k.lambda)?;
    residual_against(sys, &plus.components, &g_next, lambda_next)
}

/// Outcome of a single solver step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub point: SigmaPoint,
    /// Max-norm of the DEL residual at the accepted point.
    pub residual: f64,
    pub iterations: usize,
}

/// Default Newton guess: repeat the previous increment and multipliers.
pub fn default_guess(sys: &ConstrainedSystem, p_k: &SigmaPoint) -> DVector<f64> {
    let u = sys
        .model()
        .fiber_coords(&p_k.g)
        .unwrap_or_else(|_| DVector::zeros(sys.n_a()));
    stack(&u, &p_k.lambda)
}

/// Advances one step of the discrete flow by solving the DEL residual for `(u, lambda_next)`.
pub fn step(
    sys: &ConstrainedSystem,
    p_k: &SigmaPoint,
    guess: Option<&DVector<f64>>,
    opts: &NewtonOptions,
) -> Result<StepOutcome> {
    sys.validate(p_k)?;
    let n_a = sys.n_a();
    let m = sys.m();
    let x0 = match guess {
        Some(g) if g.len() == n_a + m => g.clone(),
        Some(g) => {
            return Err(Error::Configuration(format!(
                "guess has length {}, expected {}",
                g.len(),
                n_a + m
            )))
        }
        None => match &sys.predictor {
            Some(pred) => pred(sys, p_k)?,
            None => default_guess(sys, p_k),
        },
    };
    let model = sys.model();
    let q = model.target(&p_k.g);
    let plus = sys.plus_unchecked(&p_k.g, &p_k.lambda)?.components;
    let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let u = x.rows(0, n_a).into_owned();
        let lam = x.rows(n_a, m).into_owned();
        let g_next = model.fiber_chart(&q, &u)?;
        residual_against(sys, &plus, &g_next, &lam)
    };
    let rep = newton::solve(f, x0, opts)?;
    let g_next = model.fiber_chart(&q, &rep.x.rows(0, n_a).into_owned())?;
    let point = SigmaPoint::new(g_next, rep.x.rows(n_a, m).into_owned());
    Ok(StepOutcome {
        point,
        residual: rep.residual,
        iterations: rep.iterations,
    })
}

/// A composable sequence of Sigma_L points with per-junction diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub points: Vec<SigmaPoint>,
    /// Max-norm DEL residual at each junction (`points.len() - 1` entries).
    pub residuals: Vec<f64>,
    /// `|beta(g_k) - alpha(g_{k+1})|` at each junction.
    pub composability: Vec<f64>,
    /// Newton iterations per junction.
    pub iterations: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }

    pub fn max_composability_defect(&self) -> f64 {
        self.composability.iter().fold(0.0, |m, &r| m.max(r))
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }
}

/// Runs the discrete flow from `p1`, producing a trajectory of `n` points.
pub fn run(sys: &ConstrainedSystem, p1: SigmaPoint, n: usize, opts: &NewtonOptions) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::Configuration("a trajectory needs at least one point".into()));
    }
    sys.validate(&p1).map_err(|e| e.at_step(0))?;
    let model = sys.model();
    let mut traj = Trajectory {
        points: Vec::with_capacity(n),
        ..Default::default()
    };
    traj.points.push(p1);
    for k in 1..n {
        let prev = &traj.points[k - 1];
        let out = step(sys, prev, None, opts).map_err(|e| e.at_step(k))?;
        let gap = (model.target(&prev.g) - model.source(&out.point.g)).amax();
        traj.residuals.push(out.residual);
        traj.composability.push(gap);
        traj.iterations.push(out.iterations);
        traj.points.push(out.point);
    }
    Ok(traj)
}
