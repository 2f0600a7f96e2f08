//! Verification suites behind `dcl check`.

use std::sync::Arc;

use anyhow::Result;
use clap::ValueEnum;
use dcl_core::del::{self, regularity_report, ConstrainedSystem, SigmaPoint};
use dcl_core::groupoid::{
    check_axioms, plate_ball_groupoid, tangent_inversion_check, tangent_multiplication_check, AffineBisection,
    ChartSampler, ElementSampler, GroupBisection, Model, PairGroupoid, So3Group, TimeExtendedGroupoid,
};
use dcl_core::lie::{exp_so3, hat, mat_to_vec, AffinePin, AlgebraFunction, QuadraticCost, Retraction};
use dcl_core::newton::NewtonOptions;
use dcl_core::systems::{
    degenerate_system, free_particle, harmonic_oscillator, noether_test_system, optimal_control_point,
    optimal_control_system, pair_point, pendulum_averaged, plate_ball_initial, plate_ball_system, sigma_samples,
    time_extended, time_point, PlateBallConfig, StepRule, TimeProjection,
};
use dcl_core::verification::{
    criticality_at, max_action_criticality, momentum, morphism_reduction_check, noether_check, NoetherCandidate,
    ReductionOutcome,
};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Axioms,
    Regularity,
    Noether,
    Variational,
    Reduction,
    Identities,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] =
        [Suite::Axioms, Suite::Regularity, Suite::Noether, Suite::Variational, Suite::Reduction, Suite::Identities];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Axioms => "axioms",
            Suite::Regularity => "regularity",
            Suite::Noether => "noether",
            Suite::Variational => "variational",
            Suite::Reduction => "reduction",
            Suite::Identities => "identities",
            Suite::All => "all",
        }
    }
}

/// One checked quantity. `upper` means the value must stay below `limit`,
/// otherwise above it (negative controls).
#[derive(Debug, Clone)]
pub struct Line {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub upper: bool,
    /// Integer-valued (a count or a dimension).
    pub count: bool,
}

impl Line {
    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, upper: true, count: false }
    }

    fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, upper: false, count: false }
    }

    fn at_most(name: impl Into<String>, value: usize, max: usize) -> Self {
        Self { name: name.into(), value: value as f64, limit: max as f64 + 0.5, upper: true, count: true }
    }

    fn at_least(name: impl Into<String>, value: usize, min: usize) -> Self {
        Self { name: name.into(), value: value as f64, limit: min as f64 - 0.5, upper: false, count: true }
    }

    pub fn passed(&self) -> bool {
        if self.upper {
            self.value < self.limit
        } else {
            self.value > self.limit
        }
    }

    pub fn render(&self, suite: &str) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        if self.count {
            let (rel, bound) = if self.upper { ("<=", self.limit - 0.5) } else { (">=", self.limit + 0.5) };
            return format!("{verdict} [{suite}] {}: {} (need {rel} {})", self.name, self.value, bound);
        }
        let rel = if self.upper { "<" } else { ">" };
        format!("{verdict} [{suite}] {}: {:.3e} (need {rel} {:.0e})", self.name, self.value, self.limit)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub seed: u64,
    pub opts: NewtonOptions,
}

pub fn run_suite(suite: Suite, s: &Settings) -> Result<Vec<Line>> {
    match suite {
        Suite::Axioms => axioms(s),
        Suite::Regularity => regularity(s),
        Suite::Noether => noether(s),
        Suite::Variational => variational(s),
        Suite::Reduction => reduction(s),
        Suite::Identities => identities(s),
        Suite::All => anyhow::bail!("'all' is expanded by the caller"),
    }
}

fn pair_start(q0: &[f64], v: &[f64], h: f64) -> SigmaPoint {
    let q1: Vec<f64> = q0.iter().zip(v).map(|(a, b)| a + h * b).collect();
    SigmaPoint::new(pair_point(q0, &q1), DVector::zeros(0))
}

fn pendulum_start(h: f64) -> SigmaPoint {
    let (a0, a1) = (0.3f64, 0.3 + 0.5 * h);
    SigmaPoint::new(pair_point(&[a0.sin(), -a0.cos()], &[a1.sin(), -a1.cos()]), DVector::zeros(1))
}

fn noether_start(h: f64) -> SigmaPoint {
    SigmaPoint::new(pair_point(&[0.0, 0.3], &[0.8 * h, 0.3 + 0.6 * h]), DVector::zeros(1))
}

fn rigid_body() -> Arc<dyn AlgebraFunction> {
    Arc::new(QuadraticCost::diagonal([1.0, 2.0, 3.0]))
}

fn pin(axis: usize, v: f64) -> Vec<Arc<dyn AlgebraFunction>> {
    vec![Arc::new(AffinePin::coordinate(axis, v))]
}

fn axioms(s: &Settings) -> Result<Vec<Line>> {
    let models: Vec<Model> = vec![
        Arc::new(PairGroupoid::new(3)),
        Arc::new(So3Group::new(Retraction::Exp)),
        Arc::new(So3Group::new(Retraction::Cay)),
        plate_ball_groupoid(Retraction::Cay),
        Arc::new(TimeExtendedGroupoid::new(Arc::new(PairGroupoid::new(2)))),
        Arc::new(TimeExtendedGroupoid::new(Arc::new(So3Group::new(Retraction::Cay)))),
    ];
    let mut out = Vec::new();
    for (i, m) in models.iter().enumerate() {
        let mut sampler = ChartSampler::new(m.clone(), s.seed.wrapping_add(i as u64));
        let rep = check_axioms(m.as_ref(), &mut sampler, 1000)?;
        out.push(Line::below(format!("{} over 1000 samples", m.name()), rep.max_residual(), rep.tolerance));
    }
    Ok(out)
}

fn regularity(s: &Settings) -> Result<Vec<Line>> {
    let h = 0.1;
    let systems: Vec<(ConstrainedSystem, f64)> = vec![
        (free_particle(2, h)?, 0.0),
        (harmonic_oscillator(h)?, 0.0),
        (pendulum_averaged(h, 9.81)?, 2.0),
        (noether_test_system(h, 1.0, 1.0)?, 0.5),
        (degenerate_system(2)?, 0.0),
        (optimal_control_system(Retraction::Cay, rigid_body(), pin(2, 0.5), h)?, 1.0),
    ];
    let mut out = Vec::new();
    for (i, (sys, lr)) in systems.iter().enumerate() {
        let samples = sigma_samples(sys, s.seed.wrapping_add(i as u64), 100, (1.0, 0.8), *lr)?;
        let mut mismatches = 0usize;
        let mut kernel = 0usize;
        for p in &samples {
            let rep = regularity_report(sys, p)?;
            if !rep.kernels_equal() {
                mismatches += 1;
            }
            kernel = kernel.max(rep.ker_dim_minus);
        }
        out.push(Line::at_most(
            format!("{}: kernel mismatches over {} points (max kernel dim {kernel})", sys.name(), samples.len()),
            mismatches,
            0,
        ));
        if sys.name() == "degenerate" {
            out.push(Line::at_least("degenerate: kernel dimension", kernel, 1));
        }
    }
    Ok(out)
}

fn noether(s: &Settings) -> Result<Vec<Line>> {
    let h = 0.1;
    let sys = noether_test_system(h, 1.0, 1.0)?;
    let traj = del::run(&sys, noether_start(h), 101, &s.opts)?;
    let ex = NoetherCandidate::constant(DVector::from_vec(vec![1.0, 0.0]));
    let ey = NoetherCandidate::constant(DVector::from_vec(vec![0.0, 1.0]));
    let m0 = momentum(&sys, &ex, &traj.points[0])?;
    let mut drift: f64 = 0.0;
    for p in &traj.points {
        drift = drift.max((momentum(&sys, &ex, p)? - m0).abs());
    }
    let control = noether_check(&sys, &ey, &traj.points)?;

    let free = free_particle(3, h)?;
    let samples = sigma_samples(&free, s.seed, 200, (1.0, 1.0), 0.0)?;
    let mut translations: f64 = 0.0;
    for i in 0..3 {
        let mut c = DVector::zeros(3);
        c[i] = 1.0;
        translations = translations.max(noether_check(&free, &NoetherCandidate::constant(c), &samples)?);
    }
    Ok(vec![
        Line::below("noether-test: x-momentum drift over 100 steps", drift, 1e-8),
        Line::above("noether-test: y-translation violation (control)", control, 1e-3),
        Line::below("free particle: translation symmetry residual", translations, 1e-10),
    ])
}

fn variational(s: &Settings) -> Result<Vec<Line>> {
    let h = 0.1;
    let plate = PlateBallConfig { r: 1.0, omega: 0.5, c: 0.3, h: 0.05 };
    let runs: Vec<(ConstrainedSystem, SigmaPoint)> = vec![
        (free_particle(2, h)?, pair_start(&[0.0, 1.0], &[0.5, -0.2], h)),
        (harmonic_oscillator(h)?, pair_start(&[1.0], &[0.0], h)),
        (pendulum_averaged(h, 9.81)?, pendulum_start(h)),
        (noether_test_system(h, 1.0, 1.0)?, noether_start(h)),
        (
            optimal_control_system(Retraction::Exp, rigid_body(), pin(2, 0.4), h)?,
            optimal_control_point(Retraction::Exp, h, &Vector3::new(0.5, -0.3, 0.4), DVector::zeros(1))?,
        ),
        (
            plate_ball_system(&plate)?,
            plate_ball_initial(&plate, [0.0, 0.0], [0.02, 0.01], [0.2, -0.1, 0.05])?,
        ),
    ];
    let mut out = Vec::new();
    for (sys, p1) in runs {
        let traj = del::run(&sys, p1, 30, &s.opts)?;
        out.push(Line::below(format!("{}: action criticality", sys.name()), max_action_criticality(&sys, &traj)?, 1e-8));
    }

    let sys = pendulum_averaged(h, 9.81)?;
    let traj = del::run(&sys, pendulum_start(h), 10, &s.opts)?;
    let (g1, g2) = (&traj.points[4].g, &traj.points[5].g);
    let a = g1[3].atan2(-g1[2]) + 1e-3;
    let (mut g1p, mut g2p) = (g1.clone(), g2.clone());
    g1p[2] = a.sin();
    g1p[3] = -a.cos();
    g2p[0] = a.sin();
    g2p[1] = -a.cos();
    out.push(Line::above("pendulum: perturbed junction (control)", criticality_at(&sys, &g1p, &g2p)?, 1e-5));
    Ok(out)
}

fn reduction(s: &Settings) -> Result<Vec<Line>> {
    let h = 0.1;
    let mut out = Vec::new();
    for (inner, p1) in [
        (harmonic_oscillator(h)?, pair_start(&[1.0], &[0.0], h)),
        (pendulum_averaged(h, 9.81)?, pendulum_start(h)),
    ] {
        let full = time_extended(&inner, StepRule::Fixed(h))?;
        let reduced = del::run(&inner, p1.clone(), 50, &s.opts)?;
        let proj = TimeProjection { h, t_start: 0.0, n_a: inner.n_a() };
        let value = match morphism_reduction_check(&proj, &full.system, &inner, &reduced)? {
            ReductionOutcome::Residual(r) => r,
            ReductionOutcome::Inconclusive(_) => f64::INFINITY,
        };
        out.push(Line::below(format!("{}: lifted DEL residual", inner.name()), value, 1e-9));

        let lam = DVector::from_iterator(p1.lambda.len() + 1, p1.lambda.iter().copied().chain([0.0]));
        let ext = del::run(&full.system, time_point(0.0, h, &p1.g, lam), 50, &s.opts)?;
        let n = inner.model().coord_len();
        let mut decouple: f64 = 0.0;
        for (k, (a, b)) in ext.points.iter().zip(&reduced.points).enumerate() {
            decouple = decouple
                .max((a.g.rows(2, n) - &b.g).amax())
                .max((a.g[0] - k as f64 * h).abs())
                .max((a.g[1] - a.g[0] - h).abs());
        }
        out.push(Line::below(format!("{}: fixed-step decoupling", inner.name()), decouple, 1e-9));
    }
    Ok(out)
}

fn identities(s: &Settings) -> Result<Vec<Line>> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let models: Vec<Model> = vec![
        Arc::new(PairGroupoid::new(2)),
        Arc::new(So3Group::new(Retraction::Cay)),
        plate_ball_groupoid(Retraction::Cay),
        Arc::new(TimeExtendedGroupoid::new(Arc::new(PairGroupoid::new(1)))),
    ];
    let mut inversion: f64 = 0.0;
    for (i, m) in models.iter().enumerate() {
        let mut sampler = ChartSampler::new(m.clone(), s.seed.wrapping_add(i as u64));
        for _ in 0..100 {
            let q = sampler.base_point()?;
            let t = m
                .algebroid_basis(&q)
                .iter()
                .fold(DVector::zeros(m.coord_len()), |acc, b| acc + b * rng.random_range(-1.0..=1.0));
            let v = dcl_core::groupoid::AlgebroidVector::new(q, t);
            inversion = inversion.max(tangent_inversion_check(m.as_ref(), &v));
        }
    }

    let mut mult: f64 = 0.0;
    let pair = PairGroupoid::new(2);
    for _ in 0..20 {
        let q: Vec<Vec<f64>> = (0..3).map(|_| (0..2).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
        let g1 = pair_point(&q[0], &q[1]);
        let g2 = pair_point(&q[1], &q[2]);
        let w: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let v1 = DVector::from_vec(w[0..4].to_vec());
        let v2 = DVector::from_vec(w[2..6].to_vec());
        let m1 = DMatrix::from_fn(2, 2, |i, j| if i == j { 1.5 } else { 0.0 } + rng.random_range(-0.3..=0.3));
        let m2 = DMatrix::from_fn(2, 2, |i, j| if i == j { 0.8 } else { 0.0 } + rng.random_range(-0.3..=0.3));
        let b1 = AffineBisection::through(&g1, m1)?;
        let b2 = AffineBisection::through(&g2, m2)?;
        mult = mult.max(tangent_multiplication_check(&pair, &g1, &g2, &v1, &v2, &b1, &b2)?);
    }
    let so3 = So3Group::new(Retraction::Exp);
    let mut rv = |r: f64| Vector3::from_fn(|_, _| rng.random_range(-r..=r));
    for _ in 0..20 {
        let (r1, r2) = (exp_so3(&rv(1.0)), exp_so3(&rv(1.0)));
        let v1 = mat_to_vec(&(r1 * hat(&rv(1.0))));
        let v2 = mat_to_vec(&(r2 * hat(&rv(1.0))));
        let (g1, g2) = (mat_to_vec(&r1), mat_to_vec(&r2));
        let (b1, b2) = (GroupBisection(g1.clone()), GroupBisection(g2.clone()));
        mult = mult.max(tangent_multiplication_check(&so3, &g1, &g2, &v1, &v2, &b1, &b2)?);
    }

    let mut dtau: f64 = 0.0;
    let d = 1e-6;
    for ret in [Retraction::Exp, Retraction::Cay] {
        for _ in 0..100 {
            let (xi, eta) = (rv(1.2), rv(1.0));
            let base = ret.tau(&xi)?;
            let f = |s: f64| ret.tau_inv(&(base * exp_so3(&(eta * s))));
            let fd = (f(d)? - f(-d)?) / (2.0 * d);
            dtau = dtau.max((ret.dtau_inv(&xi, &eta)? - fd).amax());
        }
    }
    Ok(vec![
        Line::below("tangent inversion (4 models)", inversion, 1e-6),
        Line::below("tangent multiplication (pair, SO(3))", mult, 1e-5),
        Line::below("dtau^-1 against finite differences (exp, cay)", dtau, 1e-6),
    ])
}
