//! Scenario configuration: JSON documents validated before anything runs.
//!
//! A config file holds one scenario object or an array of them. Every
//! object names its `scenario`; unknown keys are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum ScenarioConfig {
    DevelopGravity(DevelopGravity),
    DevelopKepler(DevelopKepler),
    Holonomy(Holonomy),
    CheckAxioms(CheckAxioms),
    Maxwell(Maxwell),
    HomogeneousDemo(HomogeneousDemo),
}

impl ScenarioConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioConfig::DevelopGravity(_) => "develop-gravity",
            ScenarioConfig::DevelopKepler(_) => "develop-kepler",
            ScenarioConfig::Holonomy(_) => "holonomy",
            ScenarioConfig::CheckAxioms(_) => "check-axioms",
            ScenarioConfig::Maxwell(_) => "maxwell",
            ScenarioConfig::HomogeneousDemo(_) => "homogeneous-demo",
        }
    }

    pub fn output(&self) -> &OutputSpec {
        match self {
            ScenarioConfig::DevelopGravity(c) => &c.output,
            ScenarioConfig::DevelopKepler(c) => &c.output,
            ScenarioConfig::Holonomy(c) => &c.output,
            ScenarioConfig::CheckAxioms(c) => &c.output,
            ScenarioConfig::Maxwell(c) => &c.output,
            ScenarioConfig::HomogeneousDemo(c) => &c.output,
        }
    }

    /// Output file stem: `output.path` or the scenario name.
    pub fn stem(&self) -> String {
        self.output().path.clone().unwrap_or_else(|| self.kind().to_string())
    }

    fn validate(&self) -> Result<(), CliError> {
        let stem = self.stem();
        if stem.is_empty() || stem.contains(['/', '\\']) || stem.starts_with('.') {
            return Err(CliError::Schema(format!("output.path `{stem}` must be a plain file stem")));
        }
        match self {
            ScenarioConfig::DevelopGravity(c) => {
                c.integrator.validate()?;
                c.trajectory.validate()?;
                positive("tolerance", c.tolerance)
            }
            ScenarioConfig::DevelopKepler(c) => {
                c.integrator.validate()?;
                positive("tolerance", c.tolerance)?;
                positive("fraction", c.fraction)?;
                positive("mu", c.mu)
            }
            ScenarioConfig::Holonomy(c) => {
                c.integrator.validate()?;
                positive("loop.side", c.r#loop.side)?;
                positive("tolerance", c.tolerance)
            }
            ScenarioConfig::CheckAxioms(c) => {
                if c.samples == 0 {
                    return Err(CliError::Schema("samples must be positive".into()));
                }
                Ok(())
            }
            ScenarioConfig::Maxwell(c) => {
                positive("h", c.h)?;
                positive("tolerance", c.tolerance)?;
                c.fields.validate()?;
                if c.grid.n.iter().product::<usize>() == 0 {
                    return Err(CliError::Schema("grid.n entries must be positive".into()));
                }
                Ok(())
            }
            ScenarioConfig::HomogeneousDemo(c) => {
                c.integrator.validate()?;
                if c.paths == 0 {
                    return Err(CliError::Schema("paths must be positive".into()));
                }
                Ok(())
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Schema(format!("{name} must be a positive number, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File stem inside the output directory.
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integrator {
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    1e-3
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator { step: default_step() }
    }
}

impl Integrator {
    fn validate(&self) -> Result<(), CliError> {
        positive("integrator.step", self.step)
    }
}

/// Gravity field `V(t, x)`, `W(t, x)` as expressions.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravityModel {
    #[serde(rename = "V")]
    pub v: String,
    #[serde(rename = "W", default = "zero_expr")]
    pub w: String,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryPreset {
    /// `x = x0 + v0 t + g t^2 / 2`, starting from rest at the origin by default.
    Freefall,
    /// Free fall plus `amplitude * sin(frequency * t)`.
    Perturbed,
    /// Free fall with the given `x0`, `v0`.
    Ballistic,
}

/// A base path `t -> (t, x(t))`, from a preset or from expressions in `t`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub preset: Option<TrajectoryPreset>,
    /// `x(t)` as an expression.
    pub x: Option<String>,
    /// `dx/dt` as an expression; differentiated numerically when absent.
    pub v: Option<String>,
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub v0: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "one")]
    pub t1: f64,
}

fn default_g() -> f64 {
    9.81
}

fn default_amplitude() -> f64 {
    0.1
}

fn default_frequency() -> f64 {
    5.0
}

fn one() -> f64 {
    1.0
}

impl Trajectory {
    fn validate(&self) -> Result<(), CliError> {
        match (&self.preset, &self.x) {
            (Some(_), Some(_)) => return Err(CliError::Schema("trajectory takes either `preset` or `x`, not both".into())),
            (None, None) => return Err(CliError::Schema("trajectory needs `preset` or `x`".into())),
            (Some(_), None) if self.v.is_some() => return Err(CliError::Schema("trajectory `v` only applies to expression paths".into())),
            _ => {}
        }
        if !(self.t1 > self.t0) {
            return Err(CliError::Schema(format!("trajectory needs t1 > t0, got [{}, {}]", self.t0, self.t1)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DevelopGravity {
    pub model: GravityModel,
    pub trajectory: Trajectory,
    #[serde(default)]
    pub integrator: Integrator,
    /// Threshold on the largest second difference for STRAIGHT.
    #[serde(default = "default_straight_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_straight_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeplerPreset {
    /// Semi-major axis 1, eccentricity 0.5.
    Ellipse,
    /// Semi-major axis 1, eccentricity 0.
    Circle,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DevelopKepler {
    #[serde(default = "one")]
    pub mu: f64,
    pub preset: Option<KeplerPreset>,
    pub semi_major: Option<f64>,
    pub eccentricity: Option<f64>,
    /// Portion of the period to develop, starting at pericentre.
    #[serde(default = "half")]
    pub fraction: f64,
    #[serde(default = "kepler_integrator")]
    pub integrator: Integrator,
    #[serde(default = "default_kepler_tol")]
    pub tolerance: f64,
    /// Keep every `decimate`-th sample in the table.
    #[serde(default = "default_decimate")]
    pub decimate: usize,
    #[serde(default)]
    pub output: OutputSpec,
}

fn half() -> f64 {
    0.5
}

fn kepler_integrator() -> Integrator {
    Integrator { step: 1e-4 }
}

fn default_kepler_tol() -> f64 {
    1e-4
}

fn default_decimate() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    /// Lower left corner `(t, x)` of the square.
    #[serde(default)]
    pub corner: [f64; 2],
    #[serde(default = "half")]
    pub side: f64,
}

impl Default for LoopSpec {
    fn default() -> Self {
        LoopSpec { corner: [0.0; 2], side: 0.5 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Holonomy {
    pub model: GravityModel,
    #[serde(default, rename = "loop")]
    pub r#loop: LoopSpec,
    #[serde(default)]
    pub integrator: Integrator,
    /// Threshold on the log-holonomy coefficients for FLAT.
    #[serde(default = "default_flat_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_flat_tol() -> f64 {
    1e-7
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckAxioms {
    /// Registry names; all shipped models when empty.
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_samples() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Units {
    Named(UnitSystem),
    Custom { eps0: f64, mu0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    Si,
    Natural,
}

impl Default for Units {
    fn default() -> Self {
        Units::Named(UnitSystem::Natural)
    }
}

/// One scalar field component: an expression in `t, x, y, z` (with
/// `x, y, z` the spatial coordinates), a number, or a sampled CSV grid.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Component {
    Number(f64),
    Expr(String),
    Csv { csv: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldPreset {
    PlaneWave {
        wave: [f64; 3],
        polarization: [f64; 3],
        #[serde(default = "one")]
        amplitude: f64,
    },
    Coulomb {
        #[serde(default = "one")]
        q: f64,
    },
    UniformBall {
        #[serde(default = "one")]
        rho0: f64,
    },
    Zero,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub preset: Option<FieldPreset>,
    #[serde(rename = "E")]
    pub e: Option<[Component; 3]>,
    #[serde(rename = "B")]
    pub b: Option<[Component; 3]>,
    /// Defaults to `eps0 E`.
    #[serde(rename = "D")]
    pub d: Option<[Component; 3]>,
    /// Defaults to `B / mu0`.
    #[serde(rename = "H")]
    pub h: Option<[Component; 3]>,
    pub rho: Option<Component>,
    pub j: Option<[Component; 3]>,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
}

impl FieldSpec {
    fn validate(&self) -> Result<(), CliError> {
        let explicit = self.e.is_some() || self.b.is_some() || self.d.is_some() || self.h.is_some() || self.rho.is_some() || self.j.is_some();
        match (&self.preset, explicit) {
            (Some(_), true) => Err(CliError::Schema("fields take either `preset` or components, not both".into())),
            (None, false) => Err(CliError::Schema("fields need a `preset` or at least one component".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
    pub n: [usize; 4],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Maxwell {
    #[serde(default)]
    pub units: Units,
    pub fields: FieldSpec,
    pub grid: GridSpec,
    /// Finite-difference step.
    #[serde(default = "default_fd_step")]
    pub h: f64,
    /// Threshold on `|dF|` and `|dG - 4 pi J|` for CONSISTENT.
    #[serde(default = "default_straight_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_fd_step() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogeneousDemo {
    /// A flat registry model: `homogeneous`, `projective` or `mobius`.
    #[serde(default = "default_demo_model")]
    pub model: String,
    /// Number of random paths to develop.
    #[serde(default = "one_usize")]
    pub paths: usize,
    pub seed: Option<u64>,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_demo_model() -> String {
    "homogeneous".into()
}

fn one_usize() -> usize {
    1
}

/// Reads and validates a config file holding one scenario or an array.
pub fn load(path: &Path) -> Result<Vec<ScenarioConfig>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Vec<ScenarioConfig>, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Schema(format!("invalid JSON: {e}")))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        other => vec![other],
    };
    if items.is_empty() {
        return Err(CliError::Schema("empty scenario list".into()));
    }
    let mut configs = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let cfg: ScenarioConfig = serde_json::from_value(item).map_err(|e| CliError::Schema(format!("scenario {i}: {e}")))?;
        cfg.validate().map_err(|e| CliError::Schema(format!("scenario {i}: {}", e.message())))?;
        configs.push(cfg);
    }
    let mut seen = BTreeSet::new();
    for cfg in &configs {
        if !seen.insert(cfg.stem()) {
            return Err(CliError::Schema(format!("two scenarios write to the same output `{}`", cfg.stem())));
        }
    }
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_and_batch_documents() {
        let one = parse(r#"{"scenario": "develop-gravity", "model": {"V": "9.81"}, "trajectory": {"preset": "freefall"}}"#).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].stem(), "develop-gravity");
        let two = parse(
            r#"[{"scenario": "holonomy", "model": {"V": "9.81"}},
                {"scenario": "holonomy", "model": {"V": "9.81 + 0.3*x"}, "output": {"path": "curved"}}]"#,
        )
        .unwrap();
        assert_eq!(two.len(), 2);
    }

    #[test]
    fn schema_violations() {
        let bad = [
            r#"{"scenario": "develop-gravity", "model": {"V": "1"}, "trajectory": {"preset": "freefall"}, "colour": 1}"#,
            r#"{"scenario": "teleport"}"#,
            r#"{"scenario": "develop-gravity", "model": {"V": "1"}, "trajectory": {}}"#,
            r#"{"scenario": "develop-gravity", "model": {"V": "1"}, "trajectory": {"preset": "freefall", "x": "t"}}"#,
            r#"{"scenario": "holonomy", "model": {"V": "1"}, "integrator": {"step": -1}}"#,
            r#"{"scenario": "holonomy", "model": {"V": "1"}, "output": {"path": "../escape"}}"#,
            r#"[{"scenario": "holonomy", "model": {"V": "1"}}, {"scenario": "holonomy", "model": {"V": "2"}}]"#,
            r#"{"scenario": "maxwell", "fields": {"preset": {"kind": "zero"}, "rho": 1}, "grid": {"lo": [0,0,0,0], "hi": [1,1,1,1], "n": [2,2,2,2]}}"#,
            r#"[]"#,
            r#"{"scenario": "#,
        ];
        for text in bad {
            assert!(matches!(parse(text), Err(CliError::Schema(_))), "{text}");
        }
    }

    #[test]
    fn field_components() {
        let cfg = parse(
            r#"{"scenario": "maxwell", "units": {"eps0": 2, "mu0": 0.5},
                "fields": {"E": [0, "x*t", {"csv": "ez.csv"}]},
                "grid": {"lo": [0,0,0,0], "hi": [1,1,1,1], "n": [1,2,2,2]}}"#,
        )
        .unwrap();
        let ScenarioConfig::Maxwell(m) = &cfg[0] else { panic!() };
        assert_eq!(m.units, Units::Custom { eps0: 2.0, mu0: 0.5 });
        let e = m.fields.e.as_ref().unwrap();
        assert_eq!(e[0], Component::Number(0.0));
        assert_eq!(e[1], Component::Expr("x*t".into()));
        assert_eq!(e[2], Component::Csv { csv: "ez.csv".into() });
    }
}
