//! Bundled concrete systems.

mod optimal_control;
mod pair;
mod plate_ball;
mod time_extended;

pub use optimal_control::{
    body_velocity, optimal_control_point, optimal_control_system, tau_inv_extended, tau_inv_pullback,
};
pub use pair::{
    degenerate_system, free_particle, harmonic_energy, harmonic_oscillator, noether_test_system, pair_point,
    pendulum_averaged, pendulum_on_circle, pinned_particle,
};
pub use plate_ball::{
    plate_ball_constraints, plate_ball_initial, plate_ball_residual_printed, plate_ball_system,
    printed_equation_report, printed_row_scaling, rotation, PlateBallConfig, PrintedReport, PrintedRow,
    PRINTED_ROW_LABELS,
};
pub use time_extended::{
    adaptive_energy, time_extended, time_point, AdaptiveRule, StepRule, TimeExtendedSystem, TimeProjection,
};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::del::{project_to_constraints, ConstrainedSystem, SigmaPoint};
use crate::error::Result;
use crate::groupoid::{ChartSampler, ElementSampler};

/// Random points of `Sigma_L`: chart samples projected onto `N`, with
/// multipliers uniform in `[-lambda_radius, lambda_radius]`.
///
/// Samples whose projection fails are skipped, so fewer than `n` points may be returned.
pub fn sigma_samples(
    sys: &ConstrainedSystem,
    seed: u64,
    n: usize,
    radii: (f64, f64),
    lambda_radius: f64,
) -> Result<Vec<SigmaPoint>> {
    let mut sampler = ChartSampler::new(sys.model().clone(), seed).with_radii(radii.0, radii.1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < 4 * n + 16 {
        attempts += 1;
        let q = sampler.base_point()?;
        let g = sampler.element_from(&q)?;
        let Ok(g) = project_to_constraints(sys, &g) else {
            continue;
        };
        let lambda = DVector::from_fn(sys.m(), |_, _| rng.random_range(-lambda_radius..=lambda_radius));
        if let Ok(p) = sys.sigma_point(g, lambda) {
            out.push(p);
        }
    }
    Ok(out)
}
