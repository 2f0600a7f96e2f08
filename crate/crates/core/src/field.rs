//! Scalar fields on ambient coordinates and their directional derivatives.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// How directional derivatives of scalar fields are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMode {
    /// Central differences, even when an analytic gradient exists.
    FiniteDifference,
    /// Analytic gradients where the field supplies one, central differences otherwise.
    #[default]
    UserSupplied,
}

/// A real-valued function on the ambient coordinates of a groupoid.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: &DVector<f64>) -> Result<f64>;

    /// Analytic gradient in ambient coordinates, if available.
    fn gradient(&self, _x: &DVector<f64>) -> Option<Result<DVector<f64>>> {
        None
    }
}

/// Shared handle to a scalar field.
pub type Field = Arc<dyn ScalarField>;

struct FnField<F>(F);

impl<F> ScalarField for FnField<F>
where
    F: Fn(&DVector<f64>) -> f64 + Send + Sync,
{
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok((self.0)(x))
    }
}

struct FnFieldWithGradient<F, G>(F, G);

impl<F, G> ScalarField for FnFieldWithGradient<F, G>
where
    F: Fn(&DVector<f64>) -> f64 + Send + Sync,
    G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
{
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok((self.0)(x))
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<Result<DVector<f64>>> {
        Some(Ok((self.1)(x)))
    }
}

/// Wraps a closure as a field without an analytic gradient.
pub fn field<F>(f: F) -> Field
where
    F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
{
    Arc::new(FnField(f))
}

/// Wraps a closure and its gradient.
pub fn field_with_gradient<F, G>(f: F, grad: G) -> Field
where
    F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
{
    Arc::new(FnFieldWithGradient(f, grad))
}

/// The zero field.
pub fn zero_field(len: usize) -> Field {
    field_with_gradient(|_| 0.0, move |_| DVector::zeros(len))
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation(format!("{what} is not finite")))
    }
}

/// Derivative of `f` at `g` along `w`.
///
/// Uses `grad f(g) . w` when `mode` allows it and the field has a gradient,
/// otherwise `(f(g + dw) - f(g - dw)) / 2d` with `d = 1e-6 max(1, |g|)`.
pub fn directional_derivative(
    f: &dyn ScalarField,
    g: &DVector<f64>,
    w: &DVector<f64>,
    mode: GradientMode,
) -> Result<f64> {
    if mode == GradientMode::UserSupplied {
        if let Some(grad) = f.gradient(g) {
            let grad = grad?;
            if grad.len() != w.len() {
                return Err(Error::Configuration(format!(
                    "gradient has length {}, tangent vector {}",
                    grad.len(),
                    w.len()
                )));
            }
            return finite(grad.dot(w), "analytic directional derivative");
        }
    }
    let d = 1e-6 * g.norm().max(1.0);
    let fp = finite(f.value(&(g + w * d))?, "field value")?;
    let fm = finite(f.value(&(g - w * d))?, "field value")?;
    finite((fp - fm) / (2.0 * d), "finite-difference derivative")
}

/// Gradient of `f` at `x`, analytic when allowed, else by central differences.
pub fn gradient(f: &dyn ScalarField, x: &DVector<f64>, mode: GradientMode) -> Result<DVector<f64>> {
    if mode == GradientMode::UserSupplied {
        if let Some(g) = f.gradient(x) {
            return g;
        }
    }
    let n = x.len();
    let mut out = DVector::zeros(n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        out[j] = directional_derivative(f, x, &e, GradientMode::FiniteDifference)?;
    }
    Ok(out)
}
