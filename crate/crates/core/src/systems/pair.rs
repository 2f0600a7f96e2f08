//! Classical examples on the pair groupoid `R^n x R^n`.

use std::sync::Arc;

use nalgebra::DVector;

use crate::del::ConstrainedSystem;
use crate::error::{Error, Result};
use crate::field::{field_with_gradient, Field};
use crate::groupoid::{stack, AlgebroidBasis, Model, PairGroupoid};

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Configuration(format!("step size must be positive, got {h}")))
    }
}

/// Pair element `(q0, q1)`.
pub fn pair_point(q0: &[f64], q1: &[f64]) -> DVector<f64> {
    stack(&DVector::from_column_slice(q0), &DVector::from_column_slice(q1))
}

fn split(x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = x.len() / 2;
    (x.rows(0, n).into_owned(), x.rows(n, n).into_owned())
}

fn pair_system(name: &str, n: usize, lagrangian: Field, constraints: Vec<Field>) -> Result<ConstrainedSystem> {
    let model: Model = Arc::new(PairGroupoid::new(n));
    let basis = AlgebroidBasis::standard(&model);
    ConstrainedSystem::new(name, model, basis, lagrangian, constraints)
}

/// `L = |q1 - q0|^2 / (2h)` on `R^n`.
pub fn free_particle(n: usize, h: f64) -> Result<ConstrainedSystem> {
    check_h(h)?;
    let l = field_with_gradient(
        move |x| {
            let (a, b) = split(x);
            (b - a).norm_squared() / (2.0 * h)
        },
        move |x| {
            let (a, b) = split(x);
            let v = (b - a) / h;
            stack(&(-&v), &v)
        },
    );
    pair_system("free-particle", n, l, Vec::new())
}

/// `L = (q1 - q0)^2 / (2h) - h (q0 + q1)^2 / 8`: midpoint discretization of the unit oscillator.
pub fn harmonic_oscillator(h: f64) -> Result<ConstrainedSystem> {
    check_h(h)?;
    let l = field_with_gradient(
        move |x| (x[1] - x[0]).powi(2) / (2.0 * h) - h * (x[0] + x[1]).powi(2) / 8.0,
        move |x| {
            let v = (x[1] - x[0]) / h;
            let s = h * (x[0] + x[1]) / 4.0;
            DVector::from_vec(vec![-v - s, v - s])
        },
    );
    pair_system("harmonic", 1, l, Vec::new())
}

/// Discrete energy `(q1 - q0)^2 / (2h^2) + ((q0 + q1)/2)^2 / 2` of the oscillator.
pub fn harmonic_energy(g: &DVector<f64>, h: f64) -> f64 {
    let v = (g[1] - g[0]) / h;
    let q = 0.5 * (g[0] + g[1]);
    0.5 * v * v + 0.5 * q * q
}

fn pendulum_lagrangian(h: f64, gravity: f64) -> Field {
    field_with_gradient(
        move |x| {
            let (a, b) = split(x);
            let v = (&b - &a) / h;
            h * (0.5 * v.norm_squared() - gravity * 0.5 * (a[1] + b[1]))
        },
        move |x| {
            let (a, b) = split(x);
            let v = (b - a) / h;
            let pot = DVector::from_vec(vec![0.0, -0.5 * h * gravity]);
            stack(&(-&v + &pot), &(&v + &pot))
        },
    )
}

/// Planar pendulum `L = h (|v|^2 / 2 - gravity * ybar)` with the arrival point
/// on the unit circle, `phi = |q1|^2 - 1`.
///
/// The multiplier of the arriving arrow never enters the step equations, so
/// this system cannot be advanced by [`crate::del::step`]; use
/// [`pendulum_averaged`] for trajectories.
pub fn pendulum_on_circle(h: f64, gravity: f64) -> Result<ConstrainedSystem> {
    check_h(h)?;
    let phi = field_with_gradient(
        |x| x[2] * x[2] + x[3] * x[3] - 1.0,
        |x| DVector::from_vec(vec![0.0, 0.0, 2.0 * x[2], 2.0 * x[3]]),
    );
    pair_system("pendulum", 2, pendulum_lagrangian(h, gravity), vec![phi])
}

/// The pendulum with the constraint shared by both ends, `phi = (|q0|^2 + |q1|^2)/2 - 1`.
pub fn pendulum_averaged(h: f64, gravity: f64) -> Result<ConstrainedSystem> {
    check_h(h)?;
    let phi = field_with_gradient(|x| 0.5 * x.norm_squared() - 1.0, |x| x.clone());
    pair_system("pendulum-averaged", 2, pendulum_lagrangian(h, gravity), vec![phi])
}

/// Speed-constrained particle in a potential depending only on `y`:
/// `L = h (|v|^2 / 2 - omega^2 ybar^2 / 2)`, `phi = (h/2)(|v|^2 - s^2)`.
///
/// Translation in `x` is a symmetry with momentum `v_x (1 + lambda)`; translation in `y` is not.
pub fn noether_test_system(h: f64, omega: f64, speed: f64) -> Result<ConstrainedSystem> {
    check_h(h)?;
    let w2 = omega * omega;
    let l = field_with_gradient(
        move |x| {
            let (a, b) = split(x);
            let v = (&b - &a) / h;
            let yb = 0.5 * (a[1] + b[1]);
            h * (0.5 * v.norm_squared() - 0.5 * w2 * yb * yb)
        },
        move |x| {
            let (a, b) = split(x);
            let v = (&b - &a) / h;
            let yb = 0.5 * (a[1] + b[1]);
            let pot = DVector::from_vec(vec![0.0, -0.5 * h * w2 * yb]);
            stack(&(-&v + &pot), &(&v + &pot))
        },
    );
    let s2 = speed * speed;
    let phi = field_with_gradient(
        move |x| {
            let (a, b) = split(x);
            0.5 * h * (((b - a) / h).norm_squared() - s2)
        },
        move |x| {
            let (a, b) = split(x);
            let v = (b - a) / h;
            stack(&(-&v), &v)
        },
    );
    pair_system("noether-test", 2, l, vec![phi])
}

/// Degenerate Lagrangian `L(q0, q1) = sum_i (cos q1_i + q1_i^2 / 2)`, independent of `q0`.
pub fn degenerate_system(n: usize) -> Result<ConstrainedSystem> {
    let l = field_with_gradient(
        |x| {
            let (_, b) = split(x);
            b.iter().map(|q| q.cos() + 0.5 * q * q).sum()
        },
        |x| {
            let (a, b) = split(x);
            stack(&DVector::zeros(a.len()), &b.map(|q| -q.sin() + q))
        },
    );
    pair_system("degenerate", n, l, Vec::new())
}

/// Free particle on `R^n` whose arrival point has its first coordinate pinned: `phi = q1_1 - c`.
pub fn pinned_particle(n: usize, h: f64, c: f64) -> Result<ConstrainedSystem> {
    let free = free_particle(n, h)?;
    let phi = field_with_gradient(
        move |x| x[n] - c,
        move |x| {
            let mut g = DVector::zeros(x.len());
            g[n] = 1.0;
            g
        },
    );
    ConstrainedSystem::new("pinned-particle", free.model().clone(), free.basis().clone(), free.lagrangian().clone(), vec![phi])
}
