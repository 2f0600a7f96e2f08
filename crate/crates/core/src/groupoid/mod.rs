//! Chart-level Lie groupoids, their algebroids and invariant vector fields.
//!
//! Elements live in a flat ambient coordinate vector of length
//! [`Groupoid::coord_len`]; tangent vectors use the same coordinates.

mod checks;
mod models;

pub use checks::{
    check_axioms, tangent_inversion_check, tangent_multiplication_check, AffineBisection, AxiomReport, Bisection,
    ChartSampler, ElementSampler, GroupBisection,
};
pub use models::{plate_ball_groupoid, PairGroupoid, ProductGroupoid, So3Group, TimeExtendedGroupoid};

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::GradientMode;

/// Base-point mismatch above which a pair is declared non-composable.
pub const COMPOSABLE_TOL: f64 = 1e-9;

/// Numeric realization of a Lie groupoid `G => Q` in a single global chart.
pub trait Groupoid: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    /// Length of the ambient coordinate vector of an element.
    fn coord_len(&self) -> usize;
    fn dim_q(&self) -> usize;
    /// Fiber dimension of the algebroid (`dim G - dim Q`).
    fn fiber_dim(&self) -> usize;

    fn source(&self, g: &DVector<f64>) -> DVector<f64>;
    fn target(&self, g: &DVector<f64>) -> DVector<f64>;
    /// Multiplication without a composability check.
    fn compose(&self, g: &DVector<f64>, h: &DVector<f64>) -> DVector<f64>;
    fn invert(&self, g: &DVector<f64>) -> DVector<f64>;
    fn identity(&self, q: &DVector<f64>) -> DVector<f64>;

    /// Parametrizes the source fiber over `q`, with `fiber_chart(q, 0) = identity(q)`.
    fn fiber_chart(&self, q: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>>;
    /// Inverse of the fiber chart: `fiber_chart(source(g), fiber_coords(g)) = g`.
    fn fiber_coords(&self, g: &DVector<f64>) -> Result<DVector<f64>>;

    /// Standard basis of `A_q G` as tangent vectors at `identity(q)`.
    ///
    /// Defaults to the coordinate derivatives of the fiber chart at `u = 0`.
    fn algebroid_basis(&self, q: &DVector<f64>) -> Vec<DVector<f64>> {
        let n = self.fiber_dim();
        let d = 1e-6;
        (0..n)
            .map(|i| {
                let mut u = DVector::zeros(n);
                u[i] = d;
                let p = self.fiber_chart(q, &u).unwrap_or_else(|_| self.identity(q));
                u[i] = -d;
                let m = self.fiber_chart(q, &u).unwrap_or_else(|_| self.identity(q));
                (p - m) / (2.0 * d)
            })
            .collect()
    }

    /// Analytic left translation `T l_g (v)` of a vertical vector at `identity(target(g))`.
    fn left_translate(&self, _g: &DVector<f64>, _v: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    /// Analytic `-T(r_g o i)(v)` for a vertical vector at `identity(source(g))`.
    fn right_translate(&self, _g: &DVector<f64>, _v: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    /// Column labels for the ambient coordinates.
    fn coordinate_names(&self) -> Vec<String> {
        (0..self.coord_len()).map(|i| format!("g{i}")).collect()
    }
}

/// Shared handle to a groupoid model.
pub type Model = Arc<dyn Groupoid>;

/// Checked multiplication: fails when `target(g)` and `source(h)` differ by more than [`COMPOSABLE_TOL`].
pub fn multiply(model: &dyn Groupoid, g: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
    let gap = (model.target(g) - model.source(h)).amax();
    if gap > COMPOSABLE_TOL {
        return Err(Error::Domain(format!("non-composable pair (base mismatch {gap:.3e})")));
    }
    Ok(model.compose(g, h))
}

/// Global chart coordinates `(source(g), fiber_coords(g))` of an element.
pub fn chart_point(model: &dyn Groupoid, g: &DVector<f64>) -> Result<DVector<f64>> {
    let q = model.source(g);
    let u = model.fiber_coords(g)?;
    Ok(stack(&q, &u))
}

/// Element with global chart coordinates `x = (q, u)`.
pub fn from_chart_point(model: &dyn Groupoid, x: &DVector<f64>) -> Result<DVector<f64>> {
    let dq = model.dim_q();
    let q = x.rows(0, dq).into_owned();
    let u = x.rows(dq, x.len() - dq).into_owned();
    model.fiber_chart(&q, &u)
}

pub(crate) fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// A vertical tangent vector at `identity(base)`, i.e. an element of `A_base G`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebroidVector {
    pub base: DVector<f64>,
    pub tangent: DVector<f64>,
}

impl AlgebroidVector {
    pub fn new(base: DVector<f64>, tangent: DVector<f64>) -> Self {
        Self { base, tangent }
    }
}

fn fd_step(x: &DVector<f64>) -> f64 {
    1e-6 * x.norm().max(1.0)
}

fn check_base(expected: &DVector<f64>, v: &AlgebroidVector, what: &str) -> Result<()> {
    if expected.len() != v.base.len() {
        return Err(Error::Domain(format!("{what}: base dimension mismatch")));
    }
    let gap = (expected - &v.base).amax();
    if gap > COMPOSABLE_TOL {
        return Err(Error::Domain(format!("{what}: base mismatch {gap:.3e}")));
    }
    Ok(())
}

/// Left-invariant field `T l_g (v)` with `v` based at `target(g)`.
pub fn left_invariant(model: &dyn Groupoid, v: &AlgebroidVector, g: &DVector<f64>) -> Result<DVector<f64>> {
    check_base(&model.target(g), v, "left-invariant field")?;
    if let Some(w) = model.left_translate(g, &v.tangent) {
        return Ok(w);
    }
    Ok(left_invariant_fd(model, v, g))
}

/// Right-invariant field `-T(r_g o i)(v)` with `v` based at `source(g)`.
pub fn right_invariant(model: &dyn Groupoid, v: &AlgebroidVector, g: &DVector<f64>) -> Result<DVector<f64>> {
    check_base(&model.source(g), v, "right-invariant field")?;
    if let Some(w) = model.right_translate(g, &v.tangent) {
        return Ok(w);
    }
    Ok(right_invariant_fd(model, v, g))
}

/// Central difference of `h -> compose(g, h)` at `identity(v.base)` along `v`.
pub fn left_invariant_fd(model: &dyn Groupoid, v: &AlgebroidVector, g: &DVector<f64>) -> DVector<f64> {
    let e = model.identity(&v.base);
    let d = fd_step(&e);
    let p = model.compose(g, &(&e + &v.tangent * d));
    let m = model.compose(g, &(&e - &v.tangent * d));
    (p - m) / (2.0 * d)
}

/// Central difference of `h -> -compose(invert(h), g)` at `identity(v.base)` along `v`.
pub fn right_invariant_fd(model: &dyn Groupoid, v: &AlgebroidVector, g: &DVector<f64>) -> DVector<f64> {
    let e = model.identity(&v.base);
    let d = fd_step(&e);
    let p = model.compose(&model.invert(&(&e + &v.tangent * d)), g);
    let m = model.compose(&model.invert(&(&e - &v.tangent * d)), g);
    -(p - m) / (2.0 * d)
}

type BasisFn = dyn Fn(&DVector<f64>) -> Vec<DVector<f64>> + Send + Sync;

/// A basis of sections of the algebroid `AG`.
#[derive(Clone)]
pub struct AlgebroidBasis {
    n_a: usize,
    basis_at: Arc<BasisFn>,
    pub gradient_mode: GradientMode,
}

impl fmt::Debug for AlgebroidBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlgebroidBasis")
            .field("n_a", &self.n_a)
            .field("gradient_mode", &self.gradient_mode)
            .finish()
    }
}

impl AlgebroidBasis {
    pub fn new<F>(n_a: usize, basis_at: F, gradient_mode: GradientMode) -> Self
    where
        F: Fn(&DVector<f64>) -> Vec<DVector<f64>> + Send + Sync + 'static,
    {
        Self {
            n_a,
            basis_at: Arc::new(basis_at),
            gradient_mode,
        }
    }

    /// The model's own basis.
    pub fn standard(model: &Model) -> Self {
        let m = Arc::clone(model);
        Self::new(model.fiber_dim(), move |q| m.algebroid_basis(q), GradientMode::UserSupplied)
    }

    /// New basis `Y_i = sum_j t[(j, i)] X_j`.
    pub fn with_transform(&self, t: DMatrix<f64>) -> Self {
        let inner = Arc::clone(&self.basis_at);
        Self::new(
            self.n_a,
            move |q| {
                let old = inner(q);
                (0..t.ncols())
                    .map(|i| {
                        old.iter()
                            .enumerate()
                            .fold(DVector::zeros(old[0].len()), |acc, (j, x)| acc + x * t[(j, i)])
                    })
                    .collect()
            },
            self.gradient_mode,
        )
    }

    pub fn with_mode(mut self, mode: GradientMode) -> Self {
        self.gradient_mode = mode;
        self
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn tangents(&self, q: &DVector<f64>) -> Vec<DVector<f64>> {
        (self.basis_at)(q)
    }

    pub fn vectors(&self, q: &DVector<f64>) -> Vec<AlgebroidVector> {
        self.tangents(q)
            .into_iter()
            .map(|t| AlgebroidVector::new(q.clone(), t))
            .collect()
    }

    /// Algebroid vector with coefficients `c` in this basis.
    pub fn combine(&self, q: &DVector<f64>, c: &DVector<f64>) -> AlgebroidVector {
        let ts = self.tangents(q);
        let len = ts.first().map_or(0, |t| t.len());
        let t = ts.iter().zip(c.iter()).fold(DVector::zeros(len), |acc, (x, &ci)| acc + x * ci);
        AlgebroidVector::new(q.clone(), t)
    }

    /// Checks verticality (`T alpha (v) = 0`) and linear independence at `q`.
    pub fn validate(&self, model: &dyn Groupoid, q: &DVector<f64>) -> Result<()> {
        let ts = self.tangents(q);
        if ts.len() != self.n_a || self.n_a != model.fiber_dim() {
            return Err(Error::Configuration(format!(
                "basis has {} vectors, algebroid rank is {}",
                ts.len(),
                model.fiber_dim()
            )));
        }
        let e = model.identity(q);
        let d = fd_step(&e);
        for (i, t) in ts.iter().enumerate() {
            let da = (model.source(&(&e + t * d)) - model.source(&(&e - t * d))) / (2.0 * d);
            if da.amax() > 1e-8 * t.norm().max(1.0) {
                return Err(Error::Configuration(format!("basis vector {i} is not tangent to the source fiber")));
            }
        }
        if self.n_a > 0 {
            let cols: Vec<DVector<f64>> = ts.iter().map(|t| t / t.norm().max(f64::MIN_POSITIVE)).collect();
            let m = DMatrix::from_columns(&cols);
            let s = crate::linalg::singular_values(&m);
            if s.last().copied().unwrap_or(0.0) <= 1e-8 {
                return Err(Error::Configuration("basis vectors are linearly dependent".into()));
            }
        }
        Ok(())
    }
}

/// Anchor matrix `(dim_q x n_a)`: column `i` is `T beta` of basis vector `i` at `identity(q)`.
pub fn anchor(basis: &AlgebroidBasis, model: &dyn Groupoid, q: &DVector<f64>) -> DMatrix<f64> {
    let ts = basis.tangents(q);
    let e = model.identity(q);
    let d = fd_step(&e);
    let mut out = DMatrix::zeros(model.dim_q(), ts.len());
    for (i, t) in ts.iter().enumerate() {
        let col = (model.target(&(&e + t * d)) - model.target(&(&e - t * d))) / (2.0 * d);
        out.set_column(i, &col);
    }
    out
}
