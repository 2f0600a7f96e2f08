//! Ball rolling without slipping on a rotating plate, as a discrete optimal-control problem
//! on the groupoid `R^2 x R^2 x SO(3) => R^2`.
//!
//! Element layout: `(x0, y0, x1, y1, R11, ..., R33)`.

use nalgebra::{DVector, Matrix3, Vector3};

use crate::del::{junction_residual, ConstrainedSystem, SigmaPoint};
use crate::error::{Error, Result};
use crate::field::{field_with_gradient, Field};
use crate::groupoid::{plate_ball_groupoid, AlgebroidBasis};
use crate::lie::{basis_element, exp_so3, mat_to_vec, vec_to_mat, Retraction};

/// Physical and discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateBallConfig {
    /// Ball radius.
    pub r: f64,
    /// Plate angular velocity.
    pub omega: f64,
    /// Prescribed spin `omega_z`.
    pub c: f64,
    /// Time step.
    pub h: f64,
}

impl PlateBallConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Configuration(format!("h must be positive, got {}", self.h)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::Configuration(format!("r must be positive, got {}", self.r)));
        }
        if !self.omega.is_finite() || !self.c.is_finite() {
            return Err(Error::Configuration("Omega and c must be finite".into()));
        }
        Ok(())
    }
}

struct Parts {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    rot: Matrix3<f64>,
}

fn parts(g: &DVector<f64>) -> Parts {
    Parts {
        x0: g[0],
        y0: g[1],
        x1: g[2],
        y1: g[3],
        rot: vec_to_mat(&g.as_slice()[4..13]),
    }
}

/// `tr(R E_i)` (zero-based `i`).
fn tr_re(r: &Matrix3<f64>, i: usize) -> f64 {
    (r * basis_element(i)).trace()
}

/// Gradient of `R -> tr(R E)` in row-major entries: `E^T`.
fn tr_grad(i: usize) -> DVector<f64> {
    mat_to_vec(&basis_element(i).transpose())
}

fn element_gradient(dx0: f64, dy0: f64, dx1: f64, dy1: f64, dr: DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(13);
    g[0] = dx0;
    g[1] = dy0;
    g[2] = dx1;
    g[3] = dy1;
    g.rows_mut(4, 9).copy_from(&dr);
    g
}

/// The three constraint functions, in the order `phi^1, phi^2, phi^3`.
pub fn plate_ball_constraints(cfg: &PlateBallConfig) -> Vec<Field> {
    let PlateBallConfig { r, omega, c, h } = *cfg;
    let phi1 = field_with_gradient(
        move |g| {
            let p = parts(g);
            (p.y1 - p.y0) - 0.5 * r * tr_re(&p.rot, 0) - h * omega * 0.5 * (p.x1 + p.x0)
        },
        move |_| {
            let a = -0.5 * h * omega;
            element_gradient(a, -1.0, a, 1.0, tr_grad(0) * (-0.5 * r))
        },
    );
    let phi2 = field_with_gradient(
        move |g| {
            let p = parts(g);
            (p.x1 - p.x0) + 0.5 * r * tr_re(&p.rot, 1) + h * omega * 0.5 * (p.y1 + p.y0)
        },
        move |_| {
            let a = 0.5 * h * omega;
            element_gradient(-1.0, a, 1.0, a, tr_grad(1) * (0.5 * r))
        },
    );
    let phi3 = field_with_gradient(
        move |g| h * c + 0.5 * tr_re(&parts(g).rot, 2),
        |_| element_gradient(0.0, 0.0, 0.0, 0.0, tr_grad(2) * 0.5),
    );
    vec![phi1, phi2, phi3]
}

/// The plate-ball system with the Cayley map as the SO(3) fiber chart.
pub fn plate_ball_system(cfg: &PlateBallConfig) -> Result<ConstrainedSystem> {
    cfg.validate()?;
    let h = cfg.h;
    let lag = field_with_gradient(
        move |g| {
            let p = parts(g);
            0.5 * h * (((p.x1 - p.x0) / h).powi(2) + ((p.y1 - p.y0) / h).powi(2))
        },
        move |g| {
            let p = parts(g);
            let vx = (p.x1 - p.x0) / h;
            let vy = (p.y1 - p.y0) / h;
            element_gradient(-vx, -vy, vx, vy, DVector::zeros(9))
        },
    );
    let model = plate_ball_groupoid(Retraction::Cay);
    let basis = AlgebroidBasis::standard(&model);
    ConstrainedSystem::new("plate-ball", model, basis, lag, plate_ball_constraints(cfg))
}

/// Initial point with planar motion `(x0, y0) -> (x1, y1)` and the rotation
/// whose traces satisfy the three constraints exactly.
pub fn plate_ball_initial(
    cfg: &PlateBallConfig,
    start: [f64; 2],
    end: [f64; 2],
    lambda: [f64; 3],
) -> Result<SigmaPoint> {
    cfg.validate()?;
    let PlateBallConfig { r, omega, c, h } = *cfg;
    let [x0, y0] = start;
    let [x1, y1] = end;
    let t1 = 2.0 / r * ((y1 - y0) - 0.5 * h * omega * (x1 + x0));
    let t2 = -2.0 / r * ((x1 - x0) + 0.5 * h * omega * (y1 + y0));
    let t3 = -2.0 * h * c;
    // tr(exp(theta n) E_i) = -2 sin(theta) n_i
    let s = Vector3::new(t1, t2, t3) * -0.5;
    let sn = s.norm();
    if sn > 1.0 {
        return Err(Error::Configuration(format!(
            "no rotation satisfies the constraints (|sin theta| = {sn:.3} > 1); reduce the initial displacement or h"
        )));
    }
    let rot = if sn == 0.0 {
        Matrix3::identity()
    } else {
        exp_so3(&(s * (sn.asin() / sn)))
    };
    let mut g = DVector::zeros(13);
    g[0] = x0;
    g[1] = y0;
    g[2] = x1;
    g[3] = y1;
    g.rows_mut(4, 9).copy_from(&mat_to_vec(&rot));
    Ok(SigmaPoint::new(g, DVector::from_column_slice(&lambda)))
}

/// The eight closed-form plate-ball equations at the junction `p_k -> p_next`, as usually written.
pub fn plate_ball_residual_printed(cfg: &PlateBallConfig, p_k: &SigmaPoint, p_next: &SigmaPoint) -> [f64; 8] {
    let PlateBallConfig { r, omega, c, h } = *cfg;
    let a = parts(&p_k.g);
    let b = parts(&p_next.g);
    let (xm, ym, xk, yk, xp, yp) = (a.x0, a.y0, a.x1, a.y1, b.x1, b.y1);
    let lk = &p_k.lambda;
    let ln = &p_next.lambda;
    let rk = a.rot;
    let rn = b.rot;
    let e = [basis_element(0), basis_element(1), basis_element(2)];

    let mut out = [0.0; 8];
    out[0] = (xp - 2.0 * xk + xm) / (h * h) + (ln[1] - lk[1]) / h + omega * (ln[0] + lk[0]) / 2.0;
    out[1] = (yp - 2.0 * yk + ym) / (h * h) + (ln[1] - lk[1]) / h - omega * (ln[0] + lk[0]) / 2.0;
    for i in 0..3 {
        let ei = &e[i];
        out[2 + i] = -r * lk[0] * (rk * ei * e[0]).trace() + r * ln[0] * (ei * rn * e[0]).trace()
            + r * lk[1] * (rk * ei * e[1]).trace()
            - r * ln[1] * (ei * rn * e[1]).trace()
            - lk[2] * (rk * ei * e[2]).trace()
            + ln[2] * (ei * rn * e[2]).trace();
    }
    out[5] = (yp - yk) / h - r / (2.0 * h) * tr_re(&rn, 0) - omega * (xp + xk) / 2.0;
    out[6] = (xp - xk) / h + r / (2.0 * h) * tr_re(&rn, 1) + omega * (yp + yk) / 2.0;
    out[7] = c + tr_re(&rn, 2) / (2.0 * h);
    out
}

/// Factors that map the generic residual rows onto the printed normalization.
pub fn printed_row_scaling(cfg: &PlateBallConfig) -> [f64; 8] {
    let h = cfg.h;
    [-1.0 / h, -1.0 / h, 2.0, 2.0, 2.0, 1.0 / h, 1.0 / h, 1.0 / h]
}

/// Row labels of the printed system.
pub const PRINTED_ROW_LABELS: [&str; 8] = ["x", "y", "E1", "E2", "E3", "phi1", "phi2", "phi3"];

/// Per-row comparison of the printed equations with the generic residual.
#[derive(Debug, Clone, PartialEq)]
pub struct PrintedRow {
    pub label: &'static str,
    pub scale: f64,
    /// Largest `|printed - scale * generic|` over the junctions.
    pub max_difference: f64,
    /// Largest `|printed|`.
    pub max_printed: f64,
    pub agrees: bool,
}

/// Cross-check of the printed equations against the generic derivation along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PrintedReport {
    pub junctions: usize,
    pub rows: Vec<PrintedRow>,
}

impl PrintedReport {
    pub fn disagreeing(&self) -> Vec<&'static str> {
        self.rows.iter().filter(|r| !r.agrees).map(|r| r.label).collect()
    }
}

/// Evaluates both residuals at every junction of `points` and flags each row.
pub fn printed_equation_report(
    cfg: &PlateBallConfig,
    sys: &ConstrainedSystem,
    points: &[SigmaPoint],
) -> Result<PrintedReport> {
    let scale = printed_row_scaling(cfg);
    let mut diff = [0.0_f64; 8];
    let mut mag = [0.0_f64; 8];
    let mut junctions = 0;
    for w in points.windows(2) {
        let generic = junction_residual(sys, &w[0], &w[1])?;
        let printed = plate_ball_residual_printed(cfg, &w[0], &w[1]);
        for i in 0..8 {
            diff[i] = diff[i].max((printed[i] - scale[i] * generic[i]).abs());
            mag[i] = mag[i].max(printed[i].abs());
        }
        junctions += 1;
    }
    let rows = (0..8)
        .map(|i| PrintedRow {
            label: PRINTED_ROW_LABELS[i],
            scale: scale[i],
            max_difference: diff[i],
            max_printed: mag[i],
            agrees: diff[i] <= 1e-8 * mag[i].max(1.0),
        })
        .collect();
    Ok(PrintedReport { junctions, rows })
}

/// Rotation block of a plate-ball element.
pub fn rotation(g: &DVector<f64>) -> Matrix3<f64> {
    parts(g).rot
}
