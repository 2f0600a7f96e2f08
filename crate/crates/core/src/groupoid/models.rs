//! Bundled groupoid models.

use std::sync::Arc;

use nalgebra::{DVector, Matrix3};

use super::{left_invariant_fd, right_invariant_fd, stack, AlgebroidVector, Groupoid, Model};
use crate::error::{Error, Result};
use crate::lie::{basis_element, mat_to_vec, vec_to_mat, Retraction};

/// Pair groupoid `Q x Q => Q` on `Q = R^n`, with elements `(q0, q1)`.
#[derive(Debug, Clone)]
pub struct PairGroupoid {
    n: usize,
    labels: Vec<String>,
}

impl PairGroupoid {
    pub fn new(n: usize) -> Self {
        let labels = match n {
            1 => vec!["q".to_string()],
            2 => vec!["x".into(), "y".into()],
            3 => vec!["x".into(), "y".into(), "z".into()],
            _ => (1..=n).map(|i| format!("q{i}_")).collect(),
        };
        Self { n, labels }
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        Self { n: labels.len(), labels }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl Groupoid for PairGroupoid {
    fn name(&self) -> String {
        format!("pair(R^{})", self.n)
    }
    fn coord_len(&self) -> usize {
        2 * self.n
    }
    fn dim_q(&self) -> usize {
        self.n
    }
    fn fiber_dim(&self) -> usize {
        self.n
    }
    fn source(&self, g: &DVector<f64>) -> DVector<f64> {
        g.rows(0, self.n).into_owned()
    }
    fn target(&self, g: &DVector<f64>) -> DVector<f64> {
        g.rows(self.n, self.n).into_owned()
    }
    fn compose(&self, g: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        stack(&self.source(g), &self.target(h))
    }
    fn invert(&self, g: &DVector<f64>) -> DVector<f64> {
        stack(&self.target(g), &self.source(g))
    }
    fn identity(&self, q: &DVector<f64>) -> DVector<f64> {
        stack(q, q)
    }
    fn fiber_chart(&self, q: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(stack(q, &(q + u)))
    }
    fn fiber_coords(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.target(g) - self.source(g))
    }
    fn algebroid_basis(&self, _q: &DVector<f64>) -> Vec<DVector<f64>> {
        (0..self.n)
            .map(|i| {
                let mut v = DVector::zeros(2 * self.n);
                v[self.n + i] = 1.0;
                v
            })
            .collect()
    }
    fn left_translate(&self, _g: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        Some(stack(&DVector::zeros(self.n), &self.target(v)))
    }
    fn right_translate(&self, _g: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        Some(stack(&(-self.target(v)), &DVector::zeros(self.n)))
    }
    fn coordinate_names(&self) -> Vec<String> {
        let mut out: Vec<String> = self.labels.iter().map(|l| format!("{l}0")).collect();
        out.extend(self.labels.iter().map(|l| format!("{l}1")));
        out
    }
}

/// `SO(3)` as a groupoid over a point; elements are row-major 3x3 matrices.
#[derive(Debug, Clone, Copy)]
pub struct So3Group {
    pub chart: Retraction,
}

impl So3Group {
    pub fn new(chart: Retraction) -> Self {
        Self { chart }
    }
}

impl Groupoid for So3Group {
    fn name(&self) -> String {
        format!("SO(3)[{}]", self.chart.name())
    }
    fn coord_len(&self) -> usize {
        9
    }
    fn dim_q(&self) -> usize {
        0
    }
    fn fiber_dim(&self) -> usize {
        3
    }
    fn source(&self, _g: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }
    fn target(&self, _g: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }
    fn compose(&self, g: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        mat_to_vec(&(vec_to_mat(g.as_slice()) * vec_to_mat(h.as_slice())))
    }
    fn invert(&self, g: &DVector<f64>) -> DVector<f64> {
        mat_to_vec(&vec_to_mat(g.as_slice()).transpose())
    }
    fn identity(&self, _q: &DVector<f64>) -> DVector<f64> {
        mat_to_vec(&Matrix3::identity())
    }
    fn fiber_chart(&self, _q: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != 3 {
            return Err(Error::Domain(format!("SO(3) chart expects 3 coordinates, got {}", u.len())));
        }
        Ok(mat_to_vec(&self.chart.tau(&nalgebra::Vector3::new(u[0], u[1], u[2]))?))
    }
    fn fiber_coords(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        let xi = self.chart.tau_inv(&vec_to_mat(g.as_slice()))?;
        Ok(DVector::from_column_slice(xi.as_slice()))
    }
    fn algebroid_basis(&self, _q: &DVector<f64>) -> Vec<DVector<f64>> {
        (0..3).map(|i| mat_to_vec(&basis_element(i))).collect()
    }
    fn left_translate(&self, g: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        Some(mat_to_vec(&(vec_to_mat(g.as_slice()) * vec_to_mat(v.as_slice()))))
    }
    fn right_translate(&self, g: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        Some(mat_to_vec(&(vec_to_mat(v.as_slice()) * vec_to_mat(g.as_slice()))))
    }
    fn coordinate_names(&self) -> Vec<String> {
        (1..=3).flat_map(|i| (1..=3).map(move |j| format!("R{i}{j}"))).collect()
    }
}

fn left_component(model: &dyn Groupoid, g: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    model
        .left_translate(g, v)
        .unwrap_or_else(|| left_invariant_fd(model, &AlgebroidVector::new(model.target(g), v.clone()), g))
}

fn right_component(model: &dyn Groupoid, g: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    model
        .right_translate(g, v)
        .unwrap_or_else(|| right_invariant_fd(model, &AlgebroidVector::new(model.source(g), v.clone()), g))
}

/// Direct product `G1 x G2 => Q1 x Q2`, coordinates concatenated.
#[derive(Debug, Clone)]
pub struct ProductGroupoid {
    a: Model,
    b: Model,
}

impl ProductGroupoid {
    pub fn new(a: Model, b: Model) -> Self {
        Self { a, b }
    }

    fn split(&self, g: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let na = self.a.coord_len();
        (g.rows(0, na).into_owned(), g.rows(na, g.len() - na).into_owned())
    }

    fn split_base(&self, q: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let na = self.a.dim_q();
        (q.rows(0, na).into_owned(), q.rows(na, q.len() - na).into_owned())
    }
}

impl Groupoid for ProductGroupoid {
    fn name(&self) -> String {
        format!("{} x {}", self.a.name(), self.b.name())
    }
    fn coord_len(&self) -> usize {
        self.a.coord_len() + self.b.coord_len()
    }
    fn dim_q(&self) -> usize {
        self.a.dim_q() + self.b.dim_q()
    }
    fn fiber_dim(&self) -> usize {
        self.a.fiber_dim() + self.b.fiber_dim()
    }
    fn source(&self, g: &DVector<f64>) -> DVector<f64> {
        let (ga, gb) = self.split(g);
        stack(&self.a.source(&ga), &self.b.source(&gb))
    }
    fn target(&self, g: &DVector<f64>) -> DVector<f64> {
        let (ga, gb) = self.split(g);
        stack(&self.a.target(&ga), &self.b.target(&gb))
    }
    fn compose(&self, g: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        let (ga, gb) = self.split(g);
        let (ha, hb) = self.split(h);
        stack(&self.a.compose(&ga, &ha), &self.b.compose(&gb, &hb))
    }
    fn invert(&self, g: &DVector<f64>) -> DVector<f64> {
        let (ga, gb) = self.split(g);
        stack(&self.a.invert(&ga), &self.b.invert(&gb))
    }
    fn identity(&self, q: &DVector<f64>) -> DVector<f64> {
        let (qa, qb) = self.split_base(q);
        stack(&self.a.identity(&qa), &self.b.identity(&qb))
    }
    fn fiber_chart(&self, q: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        let (qa, qb) = self.split_base(q);
        let na = self.a.fiber_dim();
        if u.len() != self.fiber_dim() {
            return Err(Error::Domain("fiber coordinate length mismatch".into()));
        }
        let ua = u.rows(0, na).into_owned();
        let ub = u.rows(na, u.len() - na).into_owned();
        Ok(stack(&self.a.fiber_chart(&qa, &ua)?, &self.b.fiber_chart(&qb, &ub)?))
    }
    fn fiber_coords(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        let (ga, gb) = self.split(g);
        Ok(stack(&self.a.fiber_coords(&ga)?, &self.b.fiber_coords(&gb)?))
    }
    fn algebroid_basis(&self, q: &DVector<f64>) -> Vec<DVector<f64>> {
        let (qa, qb) = self.split_base(q);
        let za = DVector::zeros(self.a.coord_len());
        let zb = DVector::zeros(self.b.coord_len());
        let mut out: Vec<DVector<f64>> = self.a.algebroid_basis(&qa).iter().map(|v| stack(v, &zb)).collect();
        out.extend(self.b.algebroid_basis(&qb).iter().map(|v| stack(&za, v)));
        out
    }
    fn left_translate(&self, g: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let (ga, gb) = self.split(g);
        let (va, vb) = self.split(v);
        Some(stack(&left_component(self.a.as_ref(), &ga, &va), &left_component(self.b.as_ref(), &gb, &vb)))
    }
    fn right_translate(&self, g: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let (ga, gb) = self.split(g);
        let (va, vb) = self.split(v);
        Some(stack(&right_component(self.a.as_ref(), &ga, &va), &right_component(self.b.as_ref(), &gb, &vb)))
    }
    fn coordinate_names(&self) -> Vec<String> {
        let mut out = self.a.coordinate_names();
        out.extend(self.b.coordinate_names());
        out
    }
}

/// Time-extended groupoid `R x R x G => R x Q` with elements `(t0, t1, g)`.
#[derive(Debug, Clone)]
pub struct TimeExtendedGroupoid {
    inner: Model,
}

impl TimeExtendedGroupoid {
    pub fn new(inner: Model) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &Model {
        &self.inner
    }

    fn tail(v: &DVector<f64>, skip: usize) -> DVector<f64> {
        v.rows(skip, v.len() - skip).into_owned()
    }

    fn with_times(t0: f64, t1: f64, g: &DVector<f64>) -> DVector<f64> {
        stack(&DVector::from_vec(vec![t0, t1]), g)
    }
}

impl Groupoid for TimeExtendedGroupoid {
    fn name(&self) -> String {
        format!("R x R x {}", self.inner.name())
    }
    fn coord_len(&self) -> usize {
        2 + self.inner.coord_len()
    }
    fn dim_q(&self) -> usize {
        1 + self.inner.dim_q()
    }
    fn fiber_dim(&self) -> usize {
        1 + self.inner.fiber_dim()
    }
    fn source(&self, g: &DVector<f64>) -> DVector<f64> {
        stack(&DVector::from_vec(vec![g[0]]), &self.inner.source(&Self::tail(g, 2)))
    }
    fn target(&self, g: &DVector<f64>) -> DVector<f64> {
        stack(&DVector::from_vec(vec![g[1]]), &self.inner.target(&Self::tail(g, 2)))
    }
    fn compose(&self, g: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        Self::with_times(g[0], h[1], &self.inner.compose(&Self::tail(g, 2), &Self::tail(h, 2)))
    }
    fn invert(&self, g: &DVector<f64>) -> DVector<f64> {
        Self::with_times(g[1], g[0], &self.inner.invert(&Self::tail(g, 2)))
    }
    fn identity(&self, q: &DVector<f64>) -> DVector<f64> {
        Self::with_times(q[0], q[0], &self.inner.identity(&Self::tail(q, 1)))
    }
    fn fiber_chart(&self, q: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.fiber_dim() || q.len() != self.dim_q() {
            return Err(Error::Domain("time-extended chart dimension mismatch".into()));
        }
        let g = self.inner.fiber_chart(&Self::tail(q, 1), &Self::tail(u, 1))?;
        Ok(Self::with_times(q[0], q[0] + u[0], &g))
    }
    fn fiber_coords(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        let u = self.inner.fiber_coords(&Self::tail(g, 2))?;
        Ok(stack(&DVector::from_vec(vec![g[1] - g[0]]), &u))
    }
    fn algebroid_basis(&self, q: &DVector<f64>) -> Vec<DVector<f64>> {
        let n = self.inner.coord_len();
        let mut time = DVector::zeros(2 + n);
        time[1] = 1.0;
        let mut out = vec![time];
        out.extend(
            self.inner
                .algebroid_basis(&Self::tail(q, 1))
                .iter()
                .map(|v| Self::with_times(0.0, 0.0, v)),
        );
        out
    }
    fn left_translate(&self, g: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let w = left_component(self.inner.as_ref(), &Self::tail(g, 2), &Self::tail(v, 2));
        Some(Self::with_times(0.0, v[1], &w))
    }
    fn right_translate(&self, g: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let w = right_component(self.inner.as_ref(), &Self::tail(g, 2), &Self::tail(v, 2));
        Some(Self::with_times(-v[1], 0.0, &w))
    }
    fn coordinate_names(&self) -> Vec<String> {
        let mut out = vec!["t0".to_string(), "t1".to_string()];
        out.extend(self.inner.coordinate_names());
        out
    }
}

/// Convenience constructor for the plate-ball groupoid `R^2 x R^2 x SO(3) => R^2`.
pub fn plate_ball_groupoid(chart: Retraction) -> Model {
    Arc::new(ProductGroupoid::new(Arc::new(PairGroupoid::new(2)), Arc::new(So3Group::new(chart))))
}
