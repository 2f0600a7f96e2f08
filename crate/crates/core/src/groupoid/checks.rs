//! Axiom checks and tangent identities for groupoid models.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fd_step, AlgebroidVector, Groupoid, Model, COMPOSABLE_TOL};
use crate::error::{Error, Result};

/// Source of random elements for property checks.
pub trait ElementSampler {
    fn base_point(&mut self) -> Result<DVector<f64>>;
    /// A random element with source `q`.
    fn element_from(&mut self, q: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Samples uniformly in a box of global chart coordinates.
#[derive(Debug, Clone)]
pub struct ChartSampler {
    model: Model,
    rng: ChaCha8Rng,
    pub base_radius: f64,
    pub fiber_radius: f64,
}

impl ChartSampler {
    pub fn new(model: Model, seed: u64) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            base_radius: 2.0,
            fiber_radius: 1.5,
        }
    }

    pub fn with_radii(mut self, base: f64, fiber: f64) -> Self {
        self.base_radius = base;
        self.fiber_radius = fiber;
        self
    }

    fn uniform(&mut self, n: usize, r: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.rng.random_range(-r..=r))
    }
}

impl ElementSampler for ChartSampler {
    fn base_point(&mut self) -> Result<DVector<f64>> {
        let n = self.model.dim_q();
        Ok(self.uniform(n, self.base_radius))
    }

    fn element_from(&mut self, q: &DVector<f64>) -> Result<DVector<f64>> {
        let u = self.uniform(self.model.fiber_dim(), self.fiber_radius);
        self.model
            .fiber_chart(q, &u)
            .map_err(|e| Error::Configuration(format!("sampler failed: {e}")))
    }
}

/// Maximum scaled residual of each groupoid axiom over a batch of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub model: String,
    pub samples: usize,
    /// `alpha(eps(q)) = beta(eps(q)) = q`.
    pub identity_section: f64,
    /// `eps(alpha(g)) g = g` and `g eps(beta(g)) = g`.
    pub identities: f64,
    /// `g g^-1 = eps(alpha(g))` and `g^-1 g = eps(beta(g))`.
    pub inverses: f64,
    pub associativity: f64,
    /// `alpha(gh) = alpha(g)` and `beta(gh) = beta(h)`.
    pub source_target: f64,
    /// `alpha(fiber_chart(q, u)) = q`.
    pub fiber_chart: f64,
    pub tolerance: f64,
}

impl AxiomReport {
    pub fn rows(&self) -> [(&'static str, f64); 6] {
        [
            ("identity section", self.identity_section),
            ("identities", self.identities),
            ("inverses", self.inverses),
            ("associativity", self.associativity),
            ("source/target", self.source_target),
            ("fiber chart", self.fiber_chart),
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.rows().iter().fold(0.0, |m, (_, v)| f64::max(m, *v))
    }

    pub fn passed(&self) -> bool {
        self.rows().iter().all(|(_, v)| *v < self.tolerance)
    }
}

fn scaled(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a.is_empty() {
        return 0.0;
    }
    let r = (a - b).amax() / b.amax().max(1.0);
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

/// Checks the groupoid axioms on `n` sampled points, pairs and triples.
pub fn check_axioms(model: &dyn Groupoid, sampler: &mut dyn ElementSampler, n: usize) -> Result<AxiomReport> {
    let mut rep = AxiomReport {
        model: model.name(),
        samples: n,
        identity_section: 0.0,
        identities: 0.0,
        inverses: 0.0,
        associativity: 0.0,
        source_target: 0.0,
        fiber_chart: 0.0,
        tolerance: 1e-10,
    };
    for _ in 0..n {
        let q = sampler.base_point()?;
        let e = model.identity(&q);
        rep.identity_section = rep
            .identity_section
            .max(scaled(&model.source(&e), &q))
            .max(scaled(&model.target(&e), &q));

        let g = sampler.element_from(&q)?;
        let h = sampler.element_from(&model.target(&g))?;
        let k = sampler.element_from(&model.target(&h))?;
        rep.fiber_chart = rep.fiber_chart.max(scaled(&model.source(&g), &q));

        let left = model.compose(&model.identity(&model.source(&g)), &g);
        let right = model.compose(&g, &model.identity(&model.target(&g)));
        rep.identities = rep.identities.max(scaled(&left, &g)).max(scaled(&right, &g));

        let gi = model.invert(&g);
        let a = model.compose(&g, &gi);
        let b = model.compose(&gi, &g);
        rep.inverses = rep
            .inverses
            .max(scaled(&a, &model.identity(&model.source(&g))))
            .max(scaled(&b, &model.identity(&model.target(&g))));

        let gh = model.compose(&g, &h);
        let hk = model.compose(&h, &k);
        rep.associativity = rep
            .associativity
            .max(scaled(&model.compose(&gh, &k), &model.compose(&g, &hk)));

        rep.source_target = rep
            .source_target
            .max(scaled(&model.source(&gh), &model.source(&g)))
            .max(scaled(&model.target(&gh), &model.target(&h)));
    }
    Ok(rep)
}

/// Residual of `T i (v) = -v + T(eps o beta)(v)` at `identity(v.base)`, by central differences.
pub fn tangent_inversion_check(model: &dyn Groupoid, v: &AlgebroidVector) -> f64 {
    let e = model.identity(&v.base);
    let d = fd_step(&e);
    let p = &e + &v.tangent * d;
    let m = &e - &v.tangent * d;
    let ti = (model.invert(&p) - model.invert(&m)) / (2.0 * d);
    let teb = (model.identity(&model.target(&p)) - model.identity(&model.target(&m))) / (2.0 * d);
    (ti + &v.tangent - teb).amax()
}

/// A (local) bisection given by its source and target sections.
pub trait Bisection {
    /// The element of the bisection with source `q`.
    fn alpha_section(&self, q: &DVector<f64>) -> DVector<f64>;
    /// The element of the bisection with target `q`.
    fn beta_section(&self, q: &DVector<f64>) -> DVector<f64>;
}

/// Graph `{(x, A x + b)}` of an affine diffeomorphism, a bisection of the pair groupoid.
#[derive(Debug, Clone)]
pub struct AffineBisection {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: DVector<f64>,
}

impl AffineBisection {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let a_inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Configuration("affine bisection needs an invertible matrix".into()))?;
        Ok(Self { a, a_inv, b })
    }

    /// The graph of `x -> A x + b` passing through the pair element `g = (q0, q1)`.
    pub fn through(g: &DVector<f64>, a: DMatrix<f64>) -> Result<Self> {
        let n = g.len() / 2;
        let q0 = g.rows(0, n).into_owned();
        let q1 = g.rows(n, n).into_owned();
        let b = q1 - &a * q0;
        Self::new(a, b)
    }
}

impl Bisection for AffineBisection {
    fn alpha_section(&self, q: &DVector<f64>) -> DVector<f64> {
        super::stack(q, &(&self.a * q + &self.b))
    }

    fn beta_section(&self, q: &DVector<f64>) -> DVector<f64> {
        super::stack(&(&self.a_inv * (q - &self.b)), q)
    }
}

/// On a group (base a point) a bisection is a single element.
#[derive(Debug, Clone)]
pub struct GroupBisection(pub DVector<f64>);

impl Bisection for GroupBisection {
    fn alpha_section(&self, _q: &DVector<f64>) -> DVector<f64> {
        self.0.clone()
    }

    fn beta_section(&self, _q: &DVector<f64>) -> DVector<f64> {
        self.0.clone()
    }
}

/// Compares a finite-difference `Tm(v1, v2)` with the three-term bisection formula
/// `T r_{B2}(v1) + T l_{B1}(v2) - T(l_{B1} o r_{B2} o eps)(v_q)`.
pub fn tangent_multiplication_check(
    model: &dyn Groupoid,
    g1: &DVector<f64>,
    g2: &DVector<f64>,
    v1: &DVector<f64>,
    v2: &DVector<f64>,
    b1: &dyn Bisection,
    b2: &dyn Bisection,
) -> Result<f64> {
    let q = model.target(g1);
    let gap = (&q - model.source(g2)).amax();
    if gap > COMPOSABLE_TOL {
        return Err(Error::Domain(format!("non-composable pair (base mismatch {gap:.3e})")));
    }
    if (b1.beta_section(&q) - g1).amax() > 1e-9 {
        return Err(Error::Domain("first bisection does not pass through g1".into()));
    }
    if (b2.alpha_section(&q) - g2).amax() > 1e-9 {
        return Err(Error::Domain("second bisection does not pass through g2".into()));
    }

    let d = 1e-6 * g1.norm().max(g2.norm()).max(1.0);
    let diff = |f: &dyn Fn(f64) -> DVector<f64>| (f(d) - f(-d)) / (2.0 * d);

    let vq = diff(&|s| model.target(&(g1 + v1 * s)));
    let vq2 = diff(&|s| model.source(&(g2 + v2 * s)));
    if (&vq - &vq2).amax() > 1e-6 * vq.amax().max(1.0) {
        return Err(Error::Domain("tangent vectors are not composable".into()));
    }

    let tm = diff(&|s| model.compose(&(g1 + v1 * s), &(g2 + v2 * s)));
    let t1 = diff(&|s| {
        let g = g1 + v1 * s;
        model.compose(&g, &b2.alpha_section(&model.target(&g)))
    });
    let t2 = diff(&|s| {
        let g = g2 + v2 * s;
        model.compose(&b1.beta_section(&model.source(&g)), &g)
    });
    let t3 = diff(&|s| {
        let p = &q + &vq * s;
        model.compose(&b1.beta_section(&p), &b2.alpha_section(&p))
    });
    Ok((tm - (t1 + t2 - t3)).amax())
}
