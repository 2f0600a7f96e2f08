use std::sync::Arc;

use dcl_core::del::{self, junction_residual, SigmaPoint};
use dcl_core::field::field_with_gradient;
use dcl_core::lie::{
    basis_element, exp_so3, lie_poisson_step, mat_to_vec, AffinePin, AlgebraFunction, LiePoissonForm,
    LiePoissonState, QuadraticCost, Retraction,
};
use dcl_core::newton::NewtonOptions;
use dcl_core::systems::{
    adaptive_energy, body_velocity, free_particle, optimal_control_point, optimal_control_system, pair_point,
    pendulum_averaged, plate_ball_constraints, plate_ball_initial, plate_ball_residual_printed, plate_ball_system,
    printed_equation_report, printed_row_scaling, rotation, time_extended, time_point, AdaptiveRule,
    PlateBallConfig, StepRule,
};
use dcl_core::Error;
use nalgebra::{DVector, Matrix3, Vector3};

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn opts() -> NewtonOptions {
    NewtonOptions::default()
}

fn element(x0: f64, y0: f64, x1: f64, y1: f64, r: &Matrix3<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(13);
    g[0] = x0;
    g[1] = y0;
    g[2] = x1;
    g[3] = y1;
    g.rows_mut(4, 9).copy_from(&mat_to_vec(r));
    g
}

#[test]
fn plate_ball_constraint_values() {
    let cfg = PlateBallConfig { r: 0.7, omega: 0.0, c: 0.4, h: 0.1 };
    let phi = plate_ball_constraints(&cfg);
    let rest = element(0.3, -0.2, 0.3, -0.2, &Matrix3::identity());
    assert!((phi[2].value(&rest).unwrap() - cfg.h * cfg.c).abs() < 1e-15);
    assert_eq!(phi[0].value(&rest).unwrap(), 0.0);

    let theta: f64 = 0.3;
    let g = element(0.0, 0.0, 0.0, 0.0, &exp_so3(&Vector3::new(0.0, theta, 0.0)));
    // tr(g E2) = -2 sin(theta), so phi2 / h = -(r/h) sin(theta) at rest
    assert!((phi[1].value(&g).unwrap() / cfg.h + cfg.r / cfg.h * theta.sin()).abs() < 1e-13);
}

#[test]
fn plate_ball_config_is_validated() {
    for cfg in [
        PlateBallConfig { r: 1.0, omega: 0.0, c: 0.0, h: 0.0 },
        PlateBallConfig { r: -1.0, omega: 0.0, c: 0.0, h: 0.1 },
        PlateBallConfig { r: 1.0, omega: f64::NAN, c: 0.0, h: 0.1 },
    ] {
        assert!(matches!(plate_ball_system(&cfg), Err(Error::Configuration(_))));
    }
    let cfg = PlateBallConfig { r: 1.0, omega: 0.0, c: 0.0, h: 0.1 };
    assert!(matches!(plate_ball_initial(&cfg, [0.0, 0.0], [3.0, 0.0], [0.0; 3]), Err(Error::Configuration(_))));
}

#[test]
fn plate_ball_initial_satisfies_constraints() {
    let cfg = PlateBallConfig { r: 1.0, omega: 0.5, c: 0.3, h: 0.05 };
    let sys = plate_ball_system(&cfg).unwrap();
    let p = plate_ball_initial(&cfg, [0.1, -0.2], [0.13, -0.19], [0.0; 3]).unwrap();
    assert!(sys.constraint_values(&p.g).unwrap().amax() < 1e-12);
    assert!(sys.validate(&p).is_ok());
}

#[test]
fn printed_rows_vanish_at_rest() {
    let cfg = PlateBallConfig { r: 1.0, omega: 0.0, c: 0.0, h: 0.1 };
    let p = plate_ball_initial(&cfg, [0.0, 0.0], [0.0, 0.0], [0.0; 3]).unwrap();
    let rows = plate_ball_residual_printed(&cfg, &p, &p);
    assert!(rows.iter().all(|v| v.abs() < 1e-15), "{rows:?}");
}

fn plate_trajectory(n: usize) -> (PlateBallConfig, dcl_core::del::ConstrainedSystem, Vec<SigmaPoint>) {
    let cfg = PlateBallConfig { r: 1.0, omega: 0.5, c: 0.3, h: 0.05 };
    let sys = plate_ball_system(&cfg).unwrap();
    let p = plate_ball_initial(&cfg, [0.0, 0.0], [0.02, 0.01], [0.2, -0.1, 0.05]).unwrap();
    let traj = del::run(&sys, p, n, &opts()).unwrap();
    (cfg, sys, traj.points)
}

#[test]
fn printed_constraint_rows_are_scaled_constraints() {
    let (cfg, sys, pts) = plate_trajectory(5);
    for w in pts.windows(2) {
        let printed = plate_ball_residual_printed(&cfg, &w[0], &w[1]);
        let phi = sys.constraint_values(&w[1].g).unwrap();
        for a in 0..3 {
            assert!((printed[5 + a] - phi[a] / cfg.h).abs() < 1e-12);
        }
    }
}

/// The y and rotation rows as they follow from the constraint functions: the y row
/// pairs the first multiplier with the time difference, and the third multiplier
/// enters the rotation rows with the opposite sign to the printed form.
fn corrected_rows(cfg: &PlateBallConfig, a: &SigmaPoint, b: &SigmaPoint) -> [f64; 4] {
    let h = cfg.h;
    let (ym, yk, yp) = (a.g[1], a.g[3], b.g[3]);
    let (lk, ln) = (&a.lambda, &b.lambda);
    let (rk, rn) = (rotation(&a.g), rotation(&b.g));
    let e = [basis_element(0), basis_element(1), basis_element(2)];
    let mut out = [0.0; 4];
    out[0] = (yp - 2.0 * yk + ym) / (h * h) + (ln[0] - lk[0]) / h - cfg.omega * (ln[1] + lk[1]) / 2.0;
    for i in 0..3 {
        let ei = &e[i];
        out[1 + i] = -cfg.r * lk[0] * (rk * ei * e[0]).trace() + cfg.r * ln[0] * (ei * rn * e[0]).trace()
            + cfg.r * lk[1] * (rk * ei * e[1]).trace()
            - cfg.r * ln[1] * (ei * rn * e[1]).trace()
            + lk[2] * (rk * ei * e[2]).trace()
            - ln[2] * (ei * rn * e[2]).trace();
    }
    out
}

#[test]
fn printed_equations_differ_only_by_identified_typos() {
    let (cfg, sys, pts) = plate_trajectory(40);
    let report = printed_equation_report(&cfg, &sys, &pts).unwrap();
    assert_eq!(report.junctions, 39);
    assert_eq!(report.disagreeing(), vec!["y", "E1", "E2", "E3"]);
    let scale = printed_row_scaling(&cfg);
    for w in pts.windows(2) {
        let generic = junction_residual(&sys, &w[0], &w[1]).unwrap();
        let fixed = corrected_rows(&cfg, &w[0], &w[1]);
        for (j, row) in [1, 2, 3, 4].into_iter().enumerate() {
            let expected = scale[row] * generic[row];
            assert!((fixed[j] - expected).abs() < 1e-8 * fixed[j].abs().max(1.0), "row {row}");
        }
    }
}

#[test]
fn plate_ball_long_run_stays_on_constraints() {
    let (_, sys, pts) = plate_trajectory(200);
    for p in &pts {
        assert!(sys.constraint_values(&p.g).unwrap().amax() < 1e-10);
        assert!(dcl_core::lie::orthogonality_defect(&rotation(&p.g)) < 1e-10);
    }
}

fn rigid_body() -> Arc<dyn AlgebraFunction> {
    Arc::new(QuadraticCost::diagonal([1.0, 2.0, 3.0]))
}

#[test]
fn retracted_lagrangian_scales_with_h() {
    let xi = Vector3::new(0.4, -0.3, 0.8);
    for ret in [Retraction::Exp, Retraction::Cay] {
        for h in [0.01, 0.1, 0.5] {
            let sys = optimal_control_system(ret, rigid_body(), Vec::new(), h).unwrap();
            let g = mat_to_vec(&ret.tau(&(xi * h)).unwrap());
            let expected = h * rigid_body().value(&xi);
            assert!((sys.lagrangian().value(&g).unwrap() - expected).abs() < 1e-12);
            assert!((body_velocity(ret, h, &g).unwrap() - xi).amax() < 1e-12);
        }
    }
}

#[test]
fn generic_step_matches_lie_poisson_step() {
    let h = 0.1;
    let xi = Vector3::new(0.7, -0.4, 0.9);
    for ret in [Retraction::Exp, Retraction::Cay] {
        for pin in [None, Some(0.9)] {
            let psi: Vec<Arc<dyn AlgebraFunction>> =
                pin.map(|c| vec![Arc::new(AffinePin::coordinate(2, c)) as Arc<dyn AlgebraFunction>]).unwrap_or_default();
            let m = psi.len();
            let sys = optimal_control_system(ret, rigid_body(), psi.clone(), h).unwrap();
            let p = optimal_control_point(ret, h, &xi, DVector::zeros(m)).unwrap();
            let out = del::step(&sys, &p, None, &opts()).unwrap();
            let state = LiePoissonState { g: Matrix3::identity(), xi, lambda: DVector::zeros(m) };
            let lp = lie_poisson_step(ret, rigid_body().as_ref(), &psi, h, &state, LiePoissonForm::Trivialized, &opts())
                .unwrap();
            let xi_next = body_velocity(ret, h, &out.point.g).unwrap();
            assert!((xi_next - lp.xi).amax() < 1e-8);
            assert!((&out.point.lambda - &lp.lambda).amax() < 1e-8);
            if let Some(c) = pin {
                assert!((xi_next.z - c).abs() < 1e-9);
                assert!((lp.xi.z - c).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn optimal_control_rejects_bad_step() {
    assert!(matches!(
        optimal_control_system(Retraction::Cay, rigid_body(), Vec::new(), -0.1),
        Err(Error::Configuration(_))
    ));
}

#[test]
fn time_extended_identity_section() {
    let inner = free_particle(2, 0.1).unwrap();
    let ext = time_extended(&inner, StepRule::Fixed(0.1)).unwrap();
    let m = ext.system.model();
    let q = dv(&[1.5, 0.2, -0.3]);
    let e = m.identity(&q);
    assert_eq!(e, dv(&[1.5, 1.5, 0.2, -0.3, 0.2, -0.3]));
    assert_eq!(m.source(&e), q);
    assert_eq!(m.target(&e), q);
    assert_eq!(m.coord_len(), 2 + inner.model().coord_len());
    assert_eq!(ext.system.m(), 1);
    assert!(matches!(time_extended(&inner, StepRule::Fixed(0.0)), Err(Error::Configuration(_))));
}

#[test]
fn fixed_step_decouples() {
    let h = 0.05;
    let inner = pendulum_averaged(h, 9.81).unwrap();
    let ext = time_extended(&inner, StepRule::Fixed(h)).unwrap();
    let a = 0.04f64;
    let p = SigmaPoint::new(pair_point(&[1.0, 0.0], &[a.cos(), a.sin()]), dv(&[0.0]));
    let reduced = del::run(&inner, p.clone(), 40, &opts()).unwrap();
    let full = del::run(&ext.system, time_point(0.5, 0.5 + h, &p.g, dv(&[0.0, 0.0])), 40, &opts()).unwrap();
    for (k, (f, r)) in full.points.iter().zip(&reduced.points).enumerate() {
        assert!((f.g[1] - f.g[0] - h).abs() < 1e-12);
        assert!((f.g[0] - (0.5 + k as f64 * h)).abs() < 1e-9);
        assert!((f.g.rows(2, 4) - &r.g).amax() < 1e-9);
        assert!((f.lambda[0] - r.lambda[0]).abs() < 1e-9);
        assert!(f.lambda[1].abs() < 1e-9);
    }
}

#[test]
fn custom_step_rule_sets_the_increment() {
    let h = 0.1;
    let inner = free_particle(1, h).unwrap();
    let step = field_with_gradient(|g| 0.1 + 0.05 * g[1] * g[1], |g| dv(&[0.0, 0.1 * g[1]]));
    let ext = time_extended(&inner, StepRule::Custom(step)).unwrap();
    let g0 = dv(&[0.0, 0.2]);
    let dt0 = 0.1 + 0.05 * 0.04;
    let traj = del::run(&ext.system, time_point(0.0, dt0, &g0, dv(&[0.0])), 20, &opts()).unwrap();
    for p in &traj.points {
        let expected = 0.1 + 0.05 * p.g[3] * p.g[3];
        assert!((p.g[1] - p.g[0] - expected).abs() < 1e-10);
    }
    assert!(traj.max_composability_defect() < 1e-9);
}

#[test]
fn adaptive_step_conserves_energy() {
    let h = 0.1;
    let tight = NewtonOptions { tol: 1e-12, ..opts() };
    for ret in [Retraction::Cay, Retraction::Exp] {
        let rule = AdaptiveRule { retraction: ret, cost: rigid_body(), constraints: Vec::new() };
        let group = optimal_control_system(ret, rigid_body(), Vec::new(), h).unwrap();
        let adaptive = time_extended(&group, StepRule::Adaptive(rule.clone())).unwrap();
        let g = optimal_control_point(ret, h, &Vector3::new(0.6, -0.5, 0.8), DVector::zeros(0)).unwrap().g;
        let traj = del::run(&adaptive.system, time_point(0.0, h, &g, DVector::zeros(0)), 40, &tight).unwrap();
        let e0 = adaptive_energy(&rule, &traj.points[0].g).unwrap();
        for p in &traj.points {
            assert!(p.g[1] > p.g[0]);
            assert!((adaptive_energy(&rule, &p.g).unwrap() - e0).abs() < 1e-9);
        }
    }
}

#[test]
fn adaptive_rule_needs_a_group_and_positive_steps() {
    let rule = AdaptiveRule { retraction: Retraction::Cay, cost: rigid_body(), constraints: Vec::new() };
    let pair = free_particle(1, 0.1).unwrap();
    assert!(matches!(time_extended(&pair, StepRule::Adaptive(rule.clone())), Err(Error::Configuration(_))));

    let group = optimal_control_system(Retraction::Cay, rigid_body(), Vec::new(), 0.1).unwrap();
    let adaptive = time_extended(&group, StepRule::Adaptive(rule)).unwrap();
    let g = time_point(1.0, 0.9, &mat_to_vec(&Matrix3::identity()), DVector::zeros(0)).g;
    assert!(matches!(adaptive.system.lagrangian().value(&g), Err(Error::Domain(_))));
}

#[test]
fn free_time_rule_is_not_regular() {
    let h = 0.1;
    let inner = free_particle(1, h).unwrap();
    let ext = time_extended(&inner, StepRule::Free).unwrap();
    assert_eq!(ext.system.m(), 0);
    let p = time_point(0.0, h, &pair_point(&[0.0], &[0.1]), DVector::zeros(0));
    let rep = del::regularity_report(&ext.system, &p).unwrap();
    assert_eq!((rep.ker_dim_minus, rep.ker_dim_plus), (1, 1));
    assert!(!rep.is_regular());
    // The fixed-step predictor is one of the many solutions, so Newton accepts it untouched.
    let traj = del::run(&ext.system, p, 3, &opts()).unwrap();
    assert_eq!(traj.iterations, vec![0, 0]);
}
