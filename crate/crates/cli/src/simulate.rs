//! Run a configured trajectory and write it as CSV.

use std::path::Path;

use anyhow::{Context, Result};
use dcl_core::del::{self, Trajectory};

use crate::config::Scenario;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Summary {
    pub points: usize,
    pub max_residual: f64,
    pub max_constraint: f64,
    /// `(name, max |q_k - q_0|)` per conserved quantity.
    pub drift: Vec<(String, f64)>,
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "points: {}", self.points)?;
        writeln!(f, "max DEL residual: {:.3e}", self.max_residual)?;
        write!(f, "max constraint violation: {:.3e}", self.max_constraint)?;
        for (name, d) in &self.drift {
            write!(f, "\ndrift of {name}: {d:.3e}")?;
        }
        Ok(())
    }
}

pub fn header(sc: &Scenario) -> Vec<String> {
    let mut cols = vec!["step".to_string()];
    if sc.time_extended {
        cols.push("t".into());
    }
    cols.extend(sc.system.model().coordinate_names());
    cols.extend((1..=sc.system.m()).map(|i| format!("lambda_{i}")));
    cols.extend((1..=sc.system.m()).map(|i| format!("phi_{i}")));
    cols.push("residual".into());
    cols.extend(sc.conserved.iter().map(|(n, _)| n.clone()));
    cols
}

/// Integrates the scenario; solver failures carry the failing step index.
pub fn integrate(sc: &Scenario) -> dcl_core::Result<Trajectory> {
    del::run(&sc.system, sc.start.clone(), sc.steps, &sc.opts)
}

pub fn write_csv(sc: &Scenario, traj: &Trajectory, out: &Path) -> Result<Summary> {
    let mut w = csv::Writer::from_path(out).with_context(|| format!("cannot write {}", out.display()))?;
    w.write_record(header(sc))?;
    let mut max_constraint: f64 = 0.0;
    let mut first: Vec<f64> = Vec::new();
    let mut drift = vec![0.0f64; sc.conserved.len()];
    for (k, p) in traj.points.iter().enumerate() {
        let mut row = vec![k.to_string()];
        if sc.time_extended {
            row.push(num(p.g[0]));
        }
        row.extend(p.g.iter().map(|&x| num(x)));
        row.extend(p.lambda.iter().map(|&x| num(x)));
        let phi = sc.system.constraint_values(&p.g)?;
        max_constraint = max_constraint.max(phi.amax());
        row.extend(phi.iter().map(|&x| num(x)));
        // The initial point has no incoming junction.
        row.push(if k == 0 { String::new() } else { num(traj.residuals[k - 1]) });
        for (i, (name, q)) in sc.conserved.iter().enumerate() {
            let v = q(p).with_context(|| format!("evaluating {name} at point {k}"))?;
            if k == 0 {
                first.push(v);
            } else {
                drift[i] = drift[i].max((v - first[i]).abs());
            }
            row.push(num(v));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(Summary {
        points: traj.points.len(),
        max_residual: traj.max_residual(),
        max_constraint,
        drift: sc.conserved.iter().map(|(n, _)| n.clone()).zip(drift).collect(),
    })
}
