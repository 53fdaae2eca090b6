//! Scenario pipelines. Each turns a validated config into a [`Report`].

use std::path::Path;
use std::sync::Arc;

use cartan_core::cartan::{develop_base_path, is_cartan};
use cartan_core::em::{self, MaxwellConstants, MaxwellFields, Point4, SampledScalar, ScalarFn4, ScalarFnDebug, VectorField};
use cartan_core::fieldexpr::{self, Env, Expr};
use cartan_core::lie;
use cartan_core::models::{self, GravityField, KeplerOrbit};
use cartan_core::principal::{check_axioms, curvature, AXIOM_TOLERANCE};
use cartan_core::transport::{holonomy, max_second_difference, parallel_transport, LiftOptions, PiecewisePath, SmoothPath};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::config::{
    CheckAxioms, Component, DevelopGravity, DevelopKepler, FieldPreset, FieldSpec, GravityModel, Holonomy, HomogeneousDemo, KeplerPreset, Maxwell, ScenarioConfig, Trajectory,
    TrajectoryPreset, UnitSystem, Units,
};
use crate::error::CliError;
use crate::output::{Cell, Report, Table};

/// Inputs shared by every scenario of a run.
#[derive(Debug, Clone, Copy)]
pub struct Context<'a> {
    /// Directory of the config file; relative data paths resolve against it.
    pub base_dir: &'a Path,
    /// Seed from the command line, overriding any seed in the config.
    pub seed: Option<u64>,
}

impl Context<'_> {
    fn seed(&self, configured: Option<u64>) -> u64 {
        self.seed.or(configured).unwrap_or(0)
    }
}

pub fn run(cfg: &ScenarioConfig, ctx: &Context) -> Result<Report, CliError> {
    match cfg {
        ScenarioConfig::DevelopGravity(c) => develop_gravity(c),
        ScenarioConfig::DevelopKepler(c) => develop_kepler(c),
        ScenarioConfig::Holonomy(c) => holonomy_loop(c),
        ScenarioConfig::CheckAxioms(c) => axioms(c, ctx),
        ScenarioConfig::Maxwell(c) => maxwell(c, ctx),
        ScenarioConfig::HomogeneousDemo(c) => homogeneous_demo(c, ctx),
    }
}

fn gravity_field(m: &GravityModel) -> Result<GravityField, CliError> {
    Ok(GravityField::from_exprs(&m.v, &m.w, &m.constants)?)
}

fn straightness(max_sd: f64, tol: f64) -> &'static str {
    if max_sd < tol {
        "STRAIGHT"
    } else {
        "NOT_STRAIGHT"
    }
}

/// Second difference at each interior sample, empty at the two ends.
fn second_differences(times: &[f64], points: &[DVector<f64>]) -> Vec<Cell> {
    (0..points.len())
        .map(|i| {
            if i == 0 || i + 1 == points.len() {
                Cell::Empty
            } else {
                Cell::Num(max_second_difference(&times[i - 1..=i + 1], &points[i - 1..=i + 1]))
            }
        })
        .collect()
}

/// Five-point central derivative.
fn derivative(f: &(dyn Fn(f64) -> f64 + Send + Sync), t: f64) -> f64 {
    let h = 1e-3 * (1.0 + t.abs());
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn expr_scalar(src: &str, var: &'static str) -> Result<Scalar, CliError> {
    let e = fieldexpr::parse_with_vars(src, &[var]).map_err(cartan_core::Error::from)?;
    Ok(Arc::new(move |t| e.eval_with(&[(var, t)]).unwrap_or(f64::NAN)))
}

/// The space-time path `t -> (t, x(t))` of a trajectory spec.
pub fn trajectory_path(tr: &Trajectory) -> Result<SmoothPath, CliError> {
    let (t0, g) = (tr.t0, tr.g);
    let (x, v): (Scalar, Scalar) = match (tr.preset, &tr.x) {
        (Some(TrajectoryPreset::Freefall), _) => (Arc::new(move |t| 0.5 * g * (t - t0).powi(2)), Arc::new(move |t| g * (t - t0))),
        (Some(TrajectoryPreset::Ballistic), _) => {
            let (x0, v0) = (tr.x0, tr.v0);
            (Arc::new(move |t| x0 + v0 * (t - t0) + 0.5 * g * (t - t0).powi(2)), Arc::new(move |t| v0 + g * (t - t0)))
        }
        (Some(TrajectoryPreset::Perturbed), _) => {
            let (amp, freq) = (tr.amplitude, tr.frequency);
            (
                Arc::new(move |t| 0.5 * g * (t - t0).powi(2) + amp * (freq * (t - t0)).sin()),
                Arc::new(move |t| g * (t - t0) + amp * freq * (freq * (t - t0)).cos()),
            )
        }
        (None, Some(src)) => {
            let x = expr_scalar(src, "t")?;
            let v = match &tr.v {
                Some(vs) => expr_scalar(vs, "t")?,
                None => {
                    let x = x.clone();
                    Arc::new(move |t| derivative(&*x, t))
                }
            };
            (x, v)
        }
        (None, None) => return Err(CliError::Schema("trajectory needs `preset` or `x`".into())),
    };
    let (x2, v2) = (x.clone(), v.clone());
    Ok(SmoothPath::new(
        tr.t0,
        tr.t1,
        Arc::new(move |t| DVector::from_vec(vec![t, x2(t)])),
        Arc::new(move |t| DVector::from_vec(vec![1.0, v2(t)])),
    )?)
}

fn develop_gravity(c: &DevelopGravity) -> Result<Report, CliError> {
    let field = gravity_field(&c.model)?;
    let (vf, wf) = (field.v.clone(), field.w.clone());
    let cs = models::galilean_gravity(field);
    let path = trajectory_path(&c.trajectory)?;
    let dev = develop_base_path(&cs, &path, &LiftOptions::with_step(c.integrator.step))?;
    let max_sd = dev.max_second_difference();

    // Independent check of x'' = V + W x' along the path.
    let mut criterion: f64 = 0.0;
    for &t in &dev.times {
        let h = 1e-4 * (c.trajectory.t1 - c.trajectory.t0);
        let t = t.clamp(c.trajectory.t0 + h, c.trajectory.t1 - h);
        let acc = (path.velocity(t + h)[1] - path.velocity(t - h)[1]) / (2.0 * h);
        let x = path.point(t)[1];
        criterion = criterion.max((acc - vf(t, x) - wf(t, x) * path.velocity(t)[1]).abs());
    }

    let mut table = Table::new(vec!["t", "x", "y_dev", "second_diff"]);
    let sd = second_differences(&dev.times, &dev.points);
    for ((t, y), s) in dev.times.iter().zip(&dev.points).zip(sd) {
        table.push(vec![Cell::Num(*t), Cell::Num(path.point(*t)[1]), Cell::Num(y[1]), s]);
    }
    if !max_sd.is_finite() {
        return Err(CliError::Numerical("development produced non-finite points".into()));
    }
    let mut r = Report::new("develop-gravity", straightness(max_sd, c.tolerance), table);
    r.number("max_second_diff", max_sd)
        .number("geodesic_criterion_residual", criterion)
        .metric("samples", dev.times.len())
        .number("step", dev.times[1] - dev.times[0])
        .number("tolerance", c.tolerance);
    Ok(r)
}

fn develop_kepler(c: &DevelopKepler) -> Result<Report, CliError> {
    let (a0, e0) = match c.preset {
        Some(KeplerPreset::Circle) => (1.0, 0.0),
        Some(KeplerPreset::Ellipse) | None => (1.0, 0.5),
    };
    let (a, e) = (c.semi_major.unwrap_or(a0), c.eccentricity.unwrap_or(e0));
    let orbit = KeplerOrbit::new(a, e, c.mu).map_err(|err| CliError::Schema(err.to_string()))?;
    let cs = models::kepler_structure(c.mu);
    let path = orbit.path(0.0, c.fraction * orbit.period())?;
    let dev = develop_base_path(&cs, &path, &LiftOptions::with_step(c.integrator.step))?;
    let max_sd = dev.max_second_difference();

    let mut table = Table::new(vec!["t", "x", "y", "dev_x", "dev_y", "second_diff"]);
    let sd = second_differences(&dev.times, &dev.points);
    let stride = c.decimate.max(1);
    let last = dev.times.len() - 1;
    for (i, ((t, y), s)) in dev.times.iter().zip(&dev.points).zip(sd).enumerate() {
        if i % stride == 0 || i == last {
            let p = path.point(*t);
            table.push(vec![Cell::Num(*t), Cell::Num(p[1]), Cell::Num(p[2]), Cell::Num(y[1]), Cell::Num(y[2]), s]);
        }
    }
    let mut r = Report::new("develop-kepler", straightness(max_sd, c.tolerance), table);
    r.number("max_second_diff", max_sd)
        .number("semi_major", a)
        .number("eccentricity", e)
        .number("mu", c.mu)
        .number("period", orbit.period())
        .metric("samples", dev.times.len())
        .number("tolerance", c.tolerance);
    Ok(r)
}

const GALILEO_BASIS: [&str; 3] = ["eps_v", "eps_a", "eps_b"];

fn holonomy_loop(c: &Holonomy) -> Result<Report, CliError> {
    let cs = models::galilean_gravity(gravity_field(&c.model)?);
    let corner = DVector::from_row_slice(&c.r#loop.corner);
    let side = c.r#loop.side;
    let square = PiecewisePath::square_loop(&corner, 0, 1, side)?;
    let hol = holonomy(cs.connection(), &square, &LiftOptions::with_step(c.integrator.step))?;
    let log = lie::log(&hol)?.coords();

    let centre = corner.add_scalar(0.5 * side);
    let (et, ex) = (DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0]));
    let predicted = curvature(cs.connection(), &centre, &et, &ex, 1e-5)?.scale(-side * side).coords();

    let mut table = Table::new(vec!["basis", "coefficient", "curvature_prediction"]);
    for (i, name) in GALILEO_BASIS.iter().enumerate() {
        table.push(vec![(*name).into(), Cell::Num(log[i]), Cell::Num(predicted[i])]);
    }
    let largest = log.amax();
    if !largest.is_finite() {
        return Err(CliError::Numerical("non-finite holonomy".into()));
    }
    let status = if largest < c.tolerance { "FLAT" } else { "CURVED" };
    let mut r = Report::new("holonomy", status, table);
    r.number("max_abs_coefficient", largest).number("side", side).number("tolerance", c.tolerance);
    Ok(r)
}

fn axioms(c: &CheckAxioms, ctx: &Context) -> Result<Report, CliError> {
    let seed = ctx.seed(c.seed);
    let names: Vec<String> = if c.models.is_empty() { models::MODEL_NAMES.iter().map(|s| s.to_string()).collect() } else { c.models.clone() };
    let mut table = Table::new(vec!["model", "fundamental_residual", "equivariance_residual", "classification", "min_singular_value", "passed"]);
    let mut all = true;
    let mut worst: f64 = 0.0;
    for name in &names {
        let cs = models::by_name(name)?;
        let rep = check_axioms(cs.connection(), c.samples, seed)?;
        let class = is_cartan(&cs, 50, seed)?;
        all &= rep.passed();
        worst = worst.max(rep.fundamental_residual).max(rep.equivariance_residual);
        table.push(vec![
            name.as_str().into(),
            Cell::Num(rep.fundamental_residual),
            Cell::Num(rep.equivariance_residual),
            Cell::Text(class.class.to_string()),
            Cell::Num(class.min_singular_value),
            Cell::Text(rep.passed().to_string()),
        ]);
    }
    let mut r = Report::new("check-axioms", if all { "PASS" } else { "FAIL" }, table);
    r.metric("models", names.len())
        .metric("samples", c.samples)
        .metric("seed", seed)
        .number("max_residual", worst)
        .number("tolerance", AXIOM_TOLERANCE);
    Ok(r)
}

fn constants(u: Units) -> Result<MaxwellConstants, CliError> {
    match u {
        Units::Named(UnitSystem::Si) => Ok(MaxwellConstants::SI),
        Units::Named(UnitSystem::Natural) => Ok(MaxwellConstants::NATURAL),
        Units::Custom { eps0, mu0 } => MaxwellConstants::new(eps0, mu0).map_err(|e| CliError::Schema(e.to_string())),
    }
}

const SPACE_TIME: [&str; 4] = ["t", "x", "y", "z"];

fn component(comp: &Component, spec: &FieldSpec, ctx: &Context) -> Result<ScalarFn4, CliError> {
    match comp {
        Component::Number(v) => {
            let v = *v;
            Ok(Arc::new(move |_| v))
        }
        Component::Expr(src) => {
            let mut allowed: Vec<&str> = SPACE_TIME.to_vec();
            allowed.extend(spec.constants.keys().map(String::as_str));
            let expr: Expr = fieldexpr::parse_with_vars(src, &allowed).map_err(cartan_core::Error::from)?;
            let base: Env = spec.constants.iter().map(|(k, v)| (k.clone(), *v)).collect();
            Ok(Arc::new(move |p: &Point4| {
                let mut env = base.clone();
                for (name, v) in SPACE_TIME.iter().zip(p) {
                    env.insert(name.to_string(), *v);
                }
                expr.eval(&env).unwrap_or(f64::NAN)
            }))
        }
        Component::Csv { csv } => {
            let path = ctx.base_dir.join(csv);
            let mut reader = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
            let mut rows = Vec::new();
            for record in reader.deserialize::<[f64; 5]>() {
                rows.push(record.map_err(|e| csv_error(&path, e))?);
            }
            let sampled = SampledScalar::from_rows(&rows).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
            Ok(sampled.into_fn())
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io { path: path.to_path_buf(), source },
        other => CliError::Schema(format!("{}: malformed field CSV ({other:?}); expected columns t,x1,x2,x3,value", path.display())),
    }
}

fn vector(comps: &Option<[Component; 3]>, spec: &FieldSpec, ctx: &Context) -> Result<Option<VectorField>, CliError> {
    comps
        .as_ref()
        .map(|[a, b, c]| Ok(VectorField::from_fns(component(a, spec, ctx)?, component(b, spec, ctx)?, component(c, spec, ctx)?)))
        .transpose()
}

fn maxwell_fields(spec: &FieldSpec, k: &MaxwellConstants, ctx: &Context) -> Result<MaxwellFields, CliError> {
    if let Some(preset) = &spec.preset {
        return Ok(match preset {
            FieldPreset::PlaneWave { wave, polarization, amplitude } => em::plane_wave(k, *wave, *polarization, *amplitude)?,
            FieldPreset::Coulomb { q } => em::coulomb(k, *q),
            FieldPreset::UniformBall { rho0 } => em::uniform_ball(k, *rho0),
            FieldPreset::Zero => MaxwellFields::vacuum(VectorField::zero(), VectorField::zero(), k),
        });
    }
    let e = vector(&spec.e, spec, ctx)?.unwrap_or_else(VectorField::zero);
    let b = vector(&spec.b, spec, ctx)?.unwrap_or_else(VectorField::zero);
    let mut fields = MaxwellFields::vacuum(e, b, k);
    if let Some(d) = vector(&spec.d, spec, ctx)? {
        fields.d = d;
    }
    if let Some(h) = vector(&spec.h, spec, ctx)? {
        fields.h = h;
    }
    if let Some(rho) = &spec.rho {
        fields.rho = ScalarFnDebug(component(rho, spec, ctx)?);
    }
    if let Some(j) = vector(&spec.j, spec, ctx)? {
        fields.j = j;
    }
    Ok(fields)
}

fn maxwell(c: &Maxwell, ctx: &Context) -> Result<Report, CliError> {
    let k = constants(c.units)?;
    let fields = maxwell_fields(&c.fields, &k, ctx)?;
    let grid = em::grid(c.grid.lo, c.grid.hi, c.grid.n);
    let rep = em::maxwell_check(&fields, &grid, c.h);
    let rows = [
        ("dF", rep.df),
        ("dG_minus_4pi_J", rep.dg_minus_4pi_j),
        ("div_B", rep.div_b),
        ("faraday", rep.faraday),
        ("gauss", rep.gauss),
        ("ampere", rep.ampere),
        ("identification", rep.identification),
    ];
    if rows.iter().any(|(_, v)| !v.is_finite()) {
        return Err(CliError::Numerical("non-finite field values on the grid".into()));
    }
    let mut table = Table::new(vec!["quantity", "max_residual"]);
    for (name, v) in rows {
        table.push(vec![name.into(), Cell::Num(v)]);
    }
    let status = if rep.df < c.tolerance && rep.dg_minus_4pi_j < c.tolerance { "CONSISTENT" } else { "INCONSISTENT" };
    let mut r = Report::new("maxwell", status, table);
    r.metric("points", rep.points)
        .number("c", k.c())
        .number("alpha", em::calibrate_alpha(&k)?)
        .number("h", c.h)
        .number("tolerance", c.tolerance);
    Ok(r)
}

const FLAT_MODELS: [&str; 3] = ["homogeneous", "projective", "mobius"];

/// A seeded smooth path in the plane over `[0, 1]`.
pub fn random_plane_path<R: Rng>(rng: &mut R) -> Result<SmoothPath, CliError> {
    let c: [[f64; 4]; 2] = [0; 2].map(|_| [0; 4].map(|_| rng.random_range(-1.0..1.0)));
    let d = c;
    Ok(SmoothPath::new(
        0.0,
        1.0,
        Arc::new(move |t| DVector::from_fn(2, |i, _| c[i][0] + c[i][1] * t + c[i][2] * (3.0 * t).sin() + c[i][3] * t * t)),
        Arc::new(move |t| DVector::from_fn(2, |i, _| d[i][1] + 3.0 * d[i][2] * (3.0 * t).cos() + 2.0 * d[i][3] * t)),
    )?)
}

fn homogeneous_demo(c: &HomogeneousDemo, ctx: &Context) -> Result<Report, CliError> {
    if !FLAT_MODELS.contains(&c.model.as_str()) {
        return Err(CliError::Schema(format!("homogeneous-demo needs a flat model ({}), got `{}`", FLAT_MODELS.join(", "), c.model)));
    }
    let seed = ctx.seed(c.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs = models::by_name(&c.model)?;
    let opts = LiftOptions::with_step(c.integrator.step);
    let mut table = Table::new(vec!["path", "t", "x1", "x2", "dev1", "dev2"]);
    let (mut dev_err, mut transport_err): (f64, f64) = (0.0, 0.0);
    for k in 0..c.paths {
        let path = random_plane_path(&mut rng)?;
        let y = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let moved = parallel_transport(cs.connection(), &PiecewisePath::from(path.clone()), cs.spec(), &y, &opts)?;
        transport_err = transport_err.max((moved - &y).amax());
        let dev = develop_base_path(&cs, &path, &opts)?;
        for (t, p) in dev.times.iter().zip(&dev.points) {
            let x = path.point(*t);
            dev_err = dev_err.max((p - &x).amax());
            table.push(vec![Cell::Int(k as u64), Cell::Num(*t), Cell::Num(x[0]), Cell::Num(x[1]), Cell::Num(p[0]), Cell::Num(p[1])]);
        }
    }
    let class = is_cartan(&cs, 50, seed)?;
    let tol = 1e-8;
    let status = if dev_err < tol && transport_err < tol { "REPRODUCED" } else { "MISMATCH" };
    let mut r = Report::new("homogeneous-demo", status, table);
    r.metric("model", c.model.clone())
        .metric("paths", c.paths)
        .metric("seed", seed)
        .metric("classification", Value::from(class.class.to_string()))
        .number("development_error", dev_err)
        .number("transport_error", transport_err)
        .number("tolerance", tol);
    Ok(r)
}
