//! Run configuration: TOML flattened to dotted keys, checked against the keys
//! each system understands.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use dcl_core::del::{ConstrainedSystem, SigmaPoint};
use dcl_core::lie::{lie_poisson_momentum, AffinePin, AlgebraFunction, QuadraticCost, Retraction};
use dcl_core::newton::NewtonOptions;
use dcl_core::systems::{
    adaptive_energy, body_velocity, free_particle, harmonic_energy, harmonic_oscillator, noether_test_system,
    optimal_control_point, optimal_control_system, pendulum_averaged, plate_ball_initial, plate_ball_system,
    time_extended, time_point, AdaptiveRule, PlateBallConfig, StepRule,
};
use dcl_core::verification::{momentum, NoetherCandidate};
use nalgebra::{DVector, Vector3};
use toml::Value;

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Missing(String),
    Unknown(Vec<String>),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "cannot parse config: {m}"),
            ConfigError::Missing(k) => write!(f, "missing parameter: {k}"),
            ConfigError::Unknown(ks) => write!(f, "unknown parameter(s): {}", ks.join(", ")),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

type Res<T> = Result<T, ConfigError>;

fn invalid(e: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

/// Flat view of a config file.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Res<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
        let mut values = BTreeMap::new();
        flatten("", &table, &mut values);
        Ok(Self { values })
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    fn f64_opt(&self, key: &str) -> Res<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(ConfigError::Invalid(format!("{key} must be a number"))),
        }
    }

    fn f64(&self, key: &str) -> Res<f64> {
        self.f64_opt(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    fn f64_or(&self, key: &str, default: f64) -> Res<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn uint_opt(&self, key: &str) -> Res<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(ConfigError::Invalid(format!("{key} must be a non-negative integer"))),
        }
    }

    fn str_opt(&self, key: &str) -> Res<Option<&str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(ConfigError::Invalid(format!("{key} must be a string"))),
        }
    }

    fn str(&self, key: &str) -> Res<&str> {
        self.str_opt(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    fn vec_opt(&self, key: &str, len: Option<usize>) -> Res<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let Value::Array(items) = v else {
            return Err(ConfigError::Invalid(format!("{key} must be an array of numbers")));
        };
        let out = items
            .iter()
            .map(|x| match x {
                Value::Float(f) => Ok(*f),
                Value::Integer(i) => Ok(*i as f64),
                _ => Err(ConfigError::Invalid(format!("{key} must be an array of numbers"))),
            })
            .collect::<Res<Vec<f64>>>()?;
        if let Some(n) = len {
            if out.len() != n {
                return Err(ConfigError::Invalid(format!("{key} needs {n} entries, got {}", out.len())));
            }
        }
        Ok(Some(out))
    }

    fn vec(&self, key: &str, len: Option<usize>) -> Res<Vec<f64>> {
        self.vec_opt(key, len)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    fn check_known(&self, known: &BTreeSet<&str>) -> Res<()> {
        let unknown: Vec<String> = self.values.keys().filter(|k| !known.contains(k.as_str())).cloned().collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Unknown(unknown))
        }
    }
}

const COMMON_KEYS: &[&str] = &["system", "steps", "seed", "h", "solver.tol", "solver.max_iter"];
const PLATE_KEYS: &[&str] = &["plate.r", "plate.omega", "plate.c", "initial.start", "initial.end", "initial.lambda"];
const CONTROL_KEYS: &[&str] = &[
    "control.retraction",
    "control.inertia",
    "control.pin_axis",
    "control.pin_value",
    "initial.xi",
    "initial.lambda",
];
const PAIR_KEYS: &[&str] = &[
    "pair.example",
    "pair.dim",
    "pair.gravity",
    "pair.omega",
    "pair.speed",
    "initial.q0",
    "initial.q1",
    "initial.lambda",
];
const TIME_KEYS: &[&str] = &["time.inner", "time.rule", "time.t0"];

/// A function of a trajectory point written as a CSV column.
pub type Quantity = Arc<dyn Fn(&SigmaPoint) -> dcl_core::Result<f64> + Send + Sync>;

/// Everything needed to run and record one trajectory.
pub struct Scenario {
    pub system: ConstrainedSystem,
    pub start: SigmaPoint,
    /// Number of trajectory points, initial point included.
    pub steps: usize,
    pub seed: u64,
    pub opts: NewtonOptions,
    pub time_extended: bool,
    pub conserved: Vec<(String, Quantity)>,
}

struct Built {
    system: ConstrainedSystem,
    g: DVector<f64>,
    lambda: DVector<f64>,
    conserved: Vec<(String, Quantity)>,
}

fn system_keys(kind: &str) -> Res<&'static [&'static str]> {
    match kind {
        "plate-ball" => Ok(PLATE_KEYS),
        "optimal-control" => Ok(CONTROL_KEYS),
        "pair" => Ok(PAIR_KEYS),
        other => Err(ConfigError::Invalid(format!(
            "unknown system '{other}' (expected plate-ball, optimal-control, pair or time-extended)"
        ))),
    }
}

fn lambda(raw: &RawConfig, m: usize) -> Res<DVector<f64>> {
    Ok(DVector::from_vec(raw.vec_opt("initial.lambda", Some(m))?.unwrap_or_else(|| vec![0.0; m])))
}

fn build_plate(raw: &RawConfig, h: f64) -> Res<Built> {
    let cfg = PlateBallConfig {
        r: raw.f64("plate.r")?,
        omega: raw.f64_or("plate.omega", 0.0)?,
        c: raw.f64_or("plate.c", 0.0)?,
        h,
    };
    let system = plate_ball_system(&cfg).map_err(invalid)?;
    let start = raw.vec_opt("initial.start", Some(2))?.unwrap_or_else(|| vec![0.0, 0.0]);
    let end = raw.vec_opt("initial.end", Some(2))?.unwrap_or_else(|| start.clone());
    let lam = lambda(raw, 3)?;
    let p = plate_ball_initial(&cfg, [start[0], start[1]], [end[0], end[1]], [lam[0], lam[1], lam[2]])
        .map_err(invalid)?;
    Ok(Built { system, g: p.g, lambda: p.lambda, conserved: Vec::new() })
}

struct Control {
    ret: Retraction,
    cost: Arc<dyn AlgebraFunction>,
    psi: Vec<Arc<dyn AlgebraFunction>>,
}

fn control(raw: &RawConfig) -> Res<Control> {
    let ret = match raw.str_opt("control.retraction")?.unwrap_or("cay") {
        "cay" => Retraction::Cay,
        "exp" => Retraction::Exp,
        other => return Err(ConfigError::Invalid(format!("control.retraction must be cay or exp, got '{other}'"))),
    };
    let d = raw.vec_opt("control.inertia", Some(3))?.unwrap_or_else(|| vec![1.0, 1.0, 1.0]);
    let cost: Arc<dyn AlgebraFunction> = Arc::new(QuadraticCost::diagonal([d[0], d[1], d[2]]));
    let psi: Vec<Arc<dyn AlgebraFunction>> = match (raw.uint_opt("control.pin_axis")?, raw.f64_opt("control.pin_value")?) {
        (None, None) => Vec::new(),
        (Some(axis), Some(v)) if axis < 3 => vec![Arc::new(AffinePin::coordinate(axis as usize, v))],
        (Some(_), Some(_)) => return Err(ConfigError::Invalid("control.pin_axis must be 0, 1 or 2".into())),
        (Some(_), None) => return Err(ConfigError::Missing("control.pin_value".into())),
        (None, Some(_)) => return Err(ConfigError::Missing("control.pin_axis".into())),
    };
    Ok(Control { ret, cost, psi })
}

fn build_control(raw: &RawConfig, h: f64) -> Res<Built> {
    let Control { ret, cost, psi } = control(raw)?;
    let m = psi.len();
    let system = optimal_control_system(ret, cost.clone(), psi, h).map_err(invalid)?;
    let xi = raw.vec("initial.xi", Some(3))?;
    let p = optimal_control_point(ret, h, &Vector3::new(xi[0], xi[1], xi[2]), lambda(raw, m)?).map_err(invalid)?;
    let mu: Quantity = Arc::new(move |p: &SigmaPoint| {
        let xi = body_velocity(ret, h, &p.g)?;
        Ok(lie_poisson_momentum(ret, cost.as_ref(), h, &xi)?.norm())
    });
    Ok(Built { system, g: p.g, lambda: p.lambda, conserved: vec![("mu_norm".into(), mu)] })
}

fn translation_momentum(system: &ConstrainedSystem, i: usize) -> Quantity {
    let mut c = DVector::zeros(system.n_a());
    c[i] = 1.0;
    let cand = NoetherCandidate::constant(c);
    let sys = system.clone();
    Arc::new(move |p: &SigmaPoint| momentum(&sys, &cand, p))
}

fn build_pair(raw: &RawConfig, h: f64) -> Res<Built> {
    let example = raw.str("pair.example")?;
    let (system, conserved): (ConstrainedSystem, Vec<(String, Quantity)>) = match example {
        "free-particle" => {
            let n = raw.uint_opt("pair.dim")?.unwrap_or(1) as usize;
            if n == 0 {
                return Err(ConfigError::Invalid("pair.dim must be positive".into()));
            }
            let sys = free_particle(n, h).map_err(invalid)?;
            let cons = (0..n).map(|i| (format!("momentum_{}", i + 1), translation_momentum(&sys, i))).collect();
            (sys, cons)
        }
        "harmonic" => {
            let sys = harmonic_oscillator(h).map_err(invalid)?;
            let e: Quantity = Arc::new(move |p: &SigmaPoint| Ok(harmonic_energy(&p.g, h)));
            (sys, vec![("energy".into(), e)])
        }
        "pendulum" => {
            let grav = raw.f64_or("pair.gravity", 9.81)?;
            let sys = pendulum_averaged(h, grav).map_err(invalid)?;
            let e: Quantity = Arc::new(move |p: &SigmaPoint| {
                let g = &p.g;
                let (vx, vy) = ((g[2] - g[0]) / h, (g[3] - g[1]) / h);
                Ok(0.5 * (vx * vx + vy * vy) + grav * 0.5 * (g[1] + g[3]))
            });
            (sys, vec![("energy".into(), e)])
        }
        "noether-test" => {
            let sys = noether_test_system(h, raw.f64_or("pair.omega", 1.0)?, raw.f64_or("pair.speed", 1.0)?)
                .map_err(invalid)?;
            let px = translation_momentum(&sys, 0);
            (sys, vec![("momentum_x".into(), px)])
        }
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown pair.example '{other}' (expected free-particle, harmonic, pendulum or noether-test)"
            )))
        }
    };
    let n = system.model().dim_q();
    let q0 = raw.vec("initial.q0", Some(n))?;
    let q1 = raw.vec("initial.q1", Some(n))?;
    let g = DVector::from_iterator(2 * n, q0.into_iter().chain(q1));
    let lambda = lambda(raw, system.m())?;
    Ok(Built { system, g, lambda, conserved })
}

fn build_inner(kind: &str, raw: &RawConfig, h: f64) -> Res<Built> {
    match kind {
        "plate-ball" => build_plate(raw, h),
        "optimal-control" => build_control(raw, h),
        "pair" => build_pair(raw, h),
        _ => system_keys(kind).map(|_| unreachable!()),
    }
}

fn lift_quantity(q: Quantity) -> Quantity {
    Arc::new(move |p: &SigmaPoint| {
        let g = p.g.rows(2, p.g.len() - 2).into_owned();
        let lambda = p.lambda.rows(0, p.lambda.len().saturating_sub(1)).into_owned();
        q(&SigmaPoint::new(g, lambda))
    })
}

impl Scenario {
    pub fn from_str(text: &str) -> Res<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Res<Self> {
        let kind = raw.str("system")?;
        let mut known: BTreeSet<&str> = COMMON_KEYS.iter().copied().collect();
        let inner_kind = if kind == "time-extended" {
            known.extend(TIME_KEYS.iter().copied());
            raw.str("time.inner")?
        } else {
            kind
        };
        known.extend(system_keys(inner_kind)?.iter().copied());
        raw.check_known(&known)?;

        let h = raw.f64("h")?;
        let steps = raw.uint_opt("steps")?.ok_or_else(|| ConfigError::Missing("steps".into()))? as usize;
        if steps == 0 {
            return Err(ConfigError::Invalid("steps must be at least 1".into()));
        }
        let seed = raw.uint_opt("seed")?.unwrap_or(0);
        let adaptive = kind == "time-extended" && raw.str_opt("time.rule")?.unwrap_or("fixed") == "adaptive";
        let mut opts = NewtonOptions { tol: if adaptive { 1e-12 } else { 1e-10 }, ..NewtonOptions::default() };
        if let Some(tol) = raw.f64_opt("solver.tol")? {
            if !(tol > 0.0) {
                return Err(ConfigError::Invalid("solver.tol must be positive".into()));
            }
            opts.tol = tol;
        }
        if let Some(it) = raw.uint_opt("solver.max_iter")? {
            opts.max_iter = it as usize;
        }

        if kind != "time-extended" {
            let b = build_inner(kind, raw, h)?;
            return Ok(Self {
                start: SigmaPoint::new(b.g, b.lambda),
                system: b.system,
                steps,
                seed,
                opts,
                time_extended: false,
                conserved: b.conserved,
            });
        }

        let t0 = raw.f64_or("time.t0", 0.0)?;
        match raw.str_opt("time.rule")?.unwrap_or("fixed") {
            "fixed" => {
                let b = build_inner(inner_kind, raw, h)?;
                let ext = time_extended(&b.system, StepRule::Fixed(h)).map_err(invalid)?;
                let lam = DVector::from_iterator(b.lambda.len() + 1, b.lambda.iter().copied().chain([0.0]));
                Ok(Self {
                    system: ext.system,
                    start: time_point(t0, t0 + h, &b.g, lam),
                    steps,
                    seed,
                    opts,
                    time_extended: true,
                    conserved: b.conserved.into_iter().map(|(n, q)| (n, lift_quantity(q))).collect(),
                })
            }
            "adaptive" => {
                if inner_kind != "optimal-control" {
                    return Err(ConfigError::Invalid("the adaptive rule needs time.inner = \"optimal-control\"".into()));
                }
                let b = build_control(raw, h)?;
                let Control { ret, cost, psi } = control(raw)?;
                let rule = AdaptiveRule { retraction: ret, cost, constraints: psi };
                let ext = time_extended(&b.system, StepRule::Adaptive(rule.clone())).map_err(invalid)?;
                let energy: Quantity = Arc::new(move |p: &SigmaPoint| adaptive_energy(&rule, &p.g));
                Ok(Self {
                    system: ext.system,
                    start: time_point(t0, t0 + h, &b.g, b.lambda),
                    steps,
                    seed,
                    opts,
                    time_extended: true,
                    conserved: vec![("energy".into(), energy)],
                })
            }
            other => Err(ConfigError::Invalid(format!("time.rule must be fixed or adaptive, got '{other}'"))),
        }
    }
}
