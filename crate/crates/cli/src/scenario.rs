//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[scenario]`,
//! `[manifold]`, `[model]`, `[params]`, `[jumps]`, `[horizon]` and
//! `[numerics]`. Unknown keys anywhere are rejected. See `scenarios/` for
//! one file per built-in example and `README.md` for the full key list.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use svpkit::dsl::{self, CoefficientSource, Scope};
use svpkit::sde::{Mark, RhoFn};
use svpkit::viability::Tolerances;
use svpkit::{
    BuiltinModel, CheckOptions, DerivativeMode, ImplicitManifold, JumpMeasure, LipschitzData,
    SdeProblem, Vector,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    scenario: RawHeader,
    manifold: RawManifold,
    model: RawModel,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    jumps: Option<RawJumps>,
    horizon: RawHorizon,
    #[serde(default)]
    numerics: RawNumerics,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeader {
    name: String,
    #[serde(default)]
    description: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ManifoldKind {
    Sphere,
    Circle,
    Torus,
    Implicit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifold {
    kind: ManifoldKind,
    dim: Option<usize>,
    radius: Option<f64>,
    major: Option<f64>,
    minor: Option<f64>,
    constraint: Option<Vec<String>>,
    reach: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    builtin: Option<String>,
    state_dim: Option<usize>,
    noise_dim: Option<usize>,
    mark_dim: Option<usize>,
    drift: Option<Vec<String>>,
    /// One list of expressions per noise column.
    diffusion: Option<Vec<Vec<String>>>,
    jump: Option<Vec<String>>,
    x0: Option<Vec<f64>>,
    mu: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJumps {
    #[serde(default)]
    marks: Vec<Vec<f64>>,
    #[serde(default)]
    weights: Vec<f64>,
    rho: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHorizon {
    #[serde(default)]
    t0: f64,
    t1: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    n_steps: Option<usize>,
    n_paths: Option<usize>,
    seed: Option<u64>,
    tube_radius: Option<f64>,
    tube_points: Option<usize>,
    tube_times: Option<usize>,
    check_times: Option<usize>,
    check_points: Option<usize>,
    tolerance_profile: Option<String>,
    drift_tol: Option<f64>,
    tangency_tol: Option<f64>,
    jump_tol: Option<f64>,
    slack_tol: Option<f64>,
    keep_paths: Option<usize>,
    ladder: Option<Vec<usize>>,
    convergence_paths: Option<usize>,
}

/// Derivative mode used by the viability checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceProfile {
    Analytic,
    Fd,
}

impl FromStr for ToleranceProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "fd" => Ok(Self::Fd),
            other => Err(format!(
                "unknown tolerance profile `{other}` (expected analytic or fd)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub tube_radius: f64,
    pub tube_points: usize,
    pub tube_times: usize,
    pub check_times: usize,
    pub check_points: usize,
    pub profile: ToleranceProfile,
    pub drift_tol: Option<f64>,
    pub tangency_tol: Option<f64>,
    pub jump_tol: Option<f64>,
    pub slack_tol: Option<f64>,
    pub keep_paths: usize,
    pub ladder: Vec<usize>,
    pub convergence_paths: usize,
}

/// How the coefficients were specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Builtin {
        model: BuiltinModel,
        beta: f64,
        lambda: f64,
    },
    Expressions {
        mu: Option<f64>,
    },
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    /// Hex SHA-256 of the file contents.
    pub hash: String,
    pub manifold: ImplicitManifold,
    pub problem: SdeProblem,
    pub model: ModelKind,
    pub numerics: Numerics,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario = toml::from_str(text)?;
        let hash = Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        build(raw, hash)
    }

    pub fn is_sphere(&self) -> bool {
        self.manifold.has_analytic()
    }

    /// Checker options after the tolerance profile and any explicit
    /// thresholds are applied.
    pub fn check_options(&self) -> CheckOptions {
        let n = &self.numerics;
        let mut opts = match n.profile {
            ToleranceProfile::Analytic => CheckOptions::default(),
            ToleranceProfile::Fd => CheckOptions::finite_difference(),
        };
        if n.drift_tol.is_some() || n.tangency_tol.is_some() || n.jump_tol.is_some() {
            let (_, base) = opts.resolve(&self.problem.coefficients);
            opts = opts.with_tolerances(Tolerances {
                drift: n.drift_tol.unwrap_or(base.drift),
                tangency: n.tangency_tol.unwrap_or(base.tangency),
                jump: n.jump_tol.unwrap_or(base.jump),
            });
        }
        opts
    }

    /// The generator constant: declared for built-ins and when `mu` is
    /// given, otherwise estimated from tube samples.
    pub fn lipschitz(&self, seed: u64) -> Result<LipschitzData, String> {
        match self.model {
            ModelKind::Builtin { model, lambda, .. } => Ok(model.lipschitz(lambda)),
            ModelKind::Expressions { mu: Some(mu) } => {
                LipschitzData::declared(mu, &self.problem.jumps).map_err(|e| e.to_string())
            }
            ModelKind::Expressions { mu: None } => {
                let samples: Vec<Vector> = self
                    .manifold
                    .sample_tube(200, self.numerics.tube_radius, seed)
                    .map_err(|e| e.to_string())?
                    .into_iter()
                    .map(|p| p.point)
                    .collect();
                LipschitzData::estimate(
                    &self.problem.coefficients,
                    &self.problem.jumps,
                    &samples,
                    self.problem.t0,
                )
                .map(|(data, _)| data)
                .map_err(|e| e.to_string())
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64, ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        invalid(format!("{name} must be positive, got {v}"))
    }
}

fn build_manifold(
    raw: &RawManifold,
    params: &BTreeMap<String, f64>,
) -> Result<ImplicitManifold, ScenarioError> {
    let allowed: &[&str] = match raw.kind {
        ManifoldKind::Sphere => &["dim", "radius"],
        ManifoldKind::Circle => &[],
        ManifoldKind::Torus => &["major", "minor"],
        ManifoldKind::Implicit => &["dim", "constraint", "reach"],
    };
    let present = [
        ("dim", raw.dim.is_some()),
        ("radius", raw.radius.is_some()),
        ("major", raw.major.is_some()),
        ("minor", raw.minor.is_some()),
        ("constraint", raw.constraint.is_some()),
        ("reach", raw.reach.is_some()),
    ];
    for (key, set) in present {
        if set && !allowed.contains(&key) {
            return invalid(format!(
                "manifold.{key} does not apply to this manifold kind"
            ));
        }
    }
    let geometry = |e: svpkit::GeometryError| ScenarioError::Invalid(e.to_string());
    match raw.kind {
        ManifoldKind::Sphere => {
            let dim = raw.dim.unwrap_or(3);
            if dim < 2 {
                return invalid(format!("sphere needs dim >= 2, got {dim}"));
            }
            let radius = positive("manifold.radius", raw.radius.unwrap_or(1.0))?;
            Ok(ImplicitManifold::sphere(dim, radius))
        }
        ManifoldKind::Circle => Ok(ImplicitManifold::circle()),
        ManifoldKind::Torus => {
            let major = raw.major.unwrap_or(2.0);
            let minor = raw.minor.unwrap_or(0.5);
            ImplicitManifold::torus(major, minor).map_err(geometry)
        }
        ManifoldKind::Implicit => {
            let dim = raw
                .dim
                .ok_or_else(|| ScenarioError::Invalid("manifold.dim is required".into()))?;
            let sources = raw
                .constraint
                .as_ref()
                .ok_or_else(|| ScenarioError::Invalid("manifold.constraint is required".into()))?;
            let reach = raw
                .reach
                .ok_or_else(|| ScenarioError::Invalid("manifold.reach is required".into()))?;
            let scope = params
                .iter()
                .fold(Scope::new(dim, 0), |s, (k, v)| s.with_param(k, *v));
            let exprs = sources
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    dsl::parse(s).map_err(|e| {
                        ScenarioError::Invalid(format!("manifold.constraint[{}]: {e}", i + 1))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let compiled = exprs
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    e.compile(&scope).map_err(|err| {
                        ScenarioError::Invalid(format!("manifold.constraint[{}]: {err}", i + 1))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let constraint: svpkit::manifold::ConstraintFn = Arc::new(move |x: &Vector| {
                Vector::from_iterator(
                    compiled.len(),
                    compiled
                        .iter()
                        .map(|c| c.eval(0.0, x.as_slice(), &[]).unwrap_or(f64::NAN)),
                )
            });
            ImplicitManifold::implicit_fd("implicit", dim, exprs.len(), constraint, reach)
                .map_err(geometry)
        }
    }
}

fn build_jumps(
    raw: Option<&RawJumps>,
    params: &BTreeMap<String, f64>,
) -> Result<JumpMeasure, ScenarioError> {
    let Some(raw) = raw else {
        return Ok(JumpMeasure::empty());
    };
    if raw.marks.len() != raw.weights.len() {
        return invalid(format!(
            "jumps: {} marks but {} weights",
            raw.marks.len(),
            raw.weights.len()
        ));
    }
    if raw.marks.is_empty() {
        return if raw.rho.is_some() {
            invalid("jumps.rho is declared but the jump list is empty")
        } else {
            invalid("[jumps] section has no marks")
        };
    }
    let marks = raw
        .marks
        .iter()
        .zip(&raw.weights)
        .map(|(m, &w)| Mark {
            value: Vector::from_column_slice(m),
            weight: w,
        })
        .collect();
    let mut measure =
        JumpMeasure::new(marks).map_err(|e| ScenarioError::Invalid(format!("jumps: {e}")))?;
    if let Some(src) = &raw.rho {
        let scope = params
            .iter()
            .fold(Scope::new(0, measure.mark_dim()), |s, (k, v)| {
                s.with_param(k, *v)
            });
        let compiled = dsl::parse(src)
            .and_then(|e| e.compile(&scope))
            .map_err(|e| ScenarioError::Invalid(format!("jumps.rho: {e}")))?;
        let rho: RhoFn =
            Arc::new(move |e: &Vector| compiled.eval(0.0, &[], e.as_slice()).unwrap_or(f64::NAN));
        measure = measure.with_rho(rho);
    }
    Ok(measure)
}

fn build_model(raw: &RawScenario) -> Result<(SdeProblem, ModelKind), ScenarioError> {
    let m = &raw.model;
    let t0 = raw.horizon.t0;
    let t1 = raw.horizon.t1;
    if let Some(id) = &m.builtin {
        let model: BuiltinModel = id.parse().map_err(|_| {
            ScenarioError::Invalid(format!(
                "unknown builtin model `{id}` (expected ex33, ex34, ex35 or decay)"
            ))
        })?;
        let extra = [
            ("state_dim", m.state_dim.is_some()),
            ("noise_dim", m.noise_dim.is_some()),
            ("mark_dim", m.mark_dim.is_some()),
            ("drift", m.drift.is_some()),
            ("diffusion", m.diffusion.is_some()),
            ("jump", m.jump.is_some()),
            ("x0", m.x0.is_some()),
            ("mu", m.mu.is_some()),
        ];
        if let Some((key, _)) = extra.iter().find(|(_, set)| *set) {
            return invalid(format!(
                "model.{key} cannot be combined with a builtin model"
            ));
        }
        if raw.jumps.is_some() {
            return invalid("builtin models carry their own jump measure; remove [jumps]");
        }
        if let Some(key) = raw
            .params
            .keys()
            .find(|k| !matches!(k.as_str(), "beta" | "lambda"))
        {
            return invalid(format!(
                "params.{key} is not a parameter of builtin models (beta, lambda)"
            ));
        }
        let beta = raw
            .params
            .get("beta")
            .copied()
            .unwrap_or(std::f64::consts::FRAC_PI_2);
        let lambda = raw.params.get("lambda").copied().unwrap_or(1.0);
        if model == BuiltinModel::ReflectedRotation && !(lambda.is_finite() && lambda > 0.0) {
            return invalid(format!("params.lambda must be positive, got {lambda}"));
        }
        let problem = model
            .problem(beta, lambda, t0, t1)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        return Ok((
            problem,
            ModelKind::Builtin {
                model,
                beta,
                lambda,
            },
        ));
    }

    let state_dim = m.state_dim.ok_or_else(|| {
        ScenarioError::Invalid("model.state_dim is required for expression models".into())
    })?;
    let drift = m
        .drift
        .clone()
        .ok_or_else(|| ScenarioError::Invalid("model.drift is required".into()))?;
    let diffusion = m.diffusion.clone().unwrap_or_default();
    if let Some(d) = m.noise_dim {
        if d != diffusion.len() {
            return invalid(format!(
                "model.noise_dim = {d} but {} diffusion columns given",
                diffusion.len()
            ));
        }
    }
    let jumps = build_jumps(raw.jumps.as_ref(), &raw.params)?;
    let mark_dim = jumps.mark_dim();
    if let Some(l) = m.mark_dim {
        if !jumps.is_empty() && l != mark_dim {
            return invalid(format!(
                "model.mark_dim = {l} but marks have dimension {mark_dim}"
            ));
        }
    }
    match (&m.jump, jumps.is_empty()) {
        (Some(_), true) => return invalid("model.jump is given but [jumps] declares no marks"),
        (None, false) => return invalid("[jumps] declares marks but model.jump is missing"),
        _ => {}
    }
    let source = CoefficientSource {
        state_dim,
        mark_dim,
        drift,
        diffusion,
        jump: m.jump.clone(),
        params: raw.params.clone(),
    };
    let coefficients = source
        .compile()
        .map_err(|e| ScenarioError::Invalid(format!("model.{e}")))?;
    let x0 = m.x0.as_ref().ok_or_else(|| {
        ScenarioError::Invalid("model.x0 is required for expression models".into())
    })?;
    if x0.len() != state_dim {
        return invalid(format!(
            "model.x0 has {} entries, state_dim is {state_dim}",
            x0.len()
        ));
    }
    if let Some(mu) = m.mu {
        if !(mu.is_finite() && mu >= 0.0) {
            return invalid(format!("model.mu must be non-negative, got {mu}"));
        }
    }
    let problem = SdeProblem::new(coefficients, jumps, t0, Vector::from_column_slice(x0), t1)
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    Ok((problem, ModelKind::Expressions { mu: m.mu }))
}

fn build_numerics(
    raw: &RawNumerics,
    manifold: &ImplicitManifold,
) -> Result<Numerics, ScenarioError> {
    let profile = match &raw.tolerance_profile {
        Some(s) => s.parse().map_err(ScenarioError::Invalid)?,
        None => ToleranceProfile::Analytic,
    };
    let tube_radius = match raw.tube_radius {
        Some(r) => positive("numerics.tube_radius", r)?,
        None => manifold.tube_radius(),
    };
    let counts = [
        ("n_steps", raw.n_steps),
        ("n_paths", raw.n_paths),
        ("tube_points", raw.tube_points),
        ("tube_times", raw.tube_times),
        ("check_times", raw.check_times),
        ("check_points", raw.check_points),
        ("convergence_paths", raw.convergence_paths),
    ];
    if let Some((key, _)) = counts.iter().find(|(_, v)| *v == Some(0)) {
        return invalid(format!("numerics.{key} must be at least 1"));
    }
    for (key, v) in [
        ("drift_tol", raw.drift_tol),
        ("tangency_tol", raw.tangency_tol),
        ("jump_tol", raw.jump_tol),
        ("slack_tol", raw.slack_tol),
    ] {
        if let Some(v) = v {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("numerics.{key} must be non-negative, got {v}"));
            }
        }
    }
    Ok(Numerics {
        n_steps: raw.n_steps.unwrap_or(1000),
        n_paths: raw.n_paths.unwrap_or(500),
        seed: raw.seed.unwrap_or(0),
        tube_radius,
        tube_points: raw.tube_points.unwrap_or(2500),
        tube_times: raw.tube_times.unwrap_or(4),
        check_times: raw.check_times.unwrap_or(20),
        check_points: raw.check_points.unwrap_or(500),
        profile,
        drift_tol: raw.drift_tol,
        tangency_tol: raw.tangency_tol,
        jump_tol: raw.jump_tol,
        slack_tol: raw.slack_tol,
        keep_paths: raw.keep_paths.unwrap_or(4),
        ladder: raw
            .ladder
            .clone()
            .unwrap_or_else(|| (6..=12).map(|k| 1usize << k).collect()),
        convergence_paths: raw.convergence_paths.unwrap_or(200),
    })
}

fn build(raw: RawScenario, hash: String) -> Result<Scenario, ScenarioError> {
    if raw.scenario.name.trim().is_empty() {
        return invalid("scenario.name must not be empty");
    }
    if !(raw.horizon.t0.is_finite()
        && raw.horizon.t1.is_finite()
        && raw.horizon.t1 > raw.horizon.t0)
    {
        return invalid(format!(
            "horizon must satisfy t0 < t1, got [{}, {}]",
            raw.horizon.t0, raw.horizon.t1
        ));
    }
    let mut manifold = build_manifold(&raw.manifold, &raw.params)?;
    let (problem, model) = build_model(&raw)?;
    let m = problem.coefficients.dim_state();
    if m != manifold.ambient_dim() {
        return invalid(format!(
            "model has state dimension {m} but the manifold lives in dimension {}",
            manifold.ambient_dim()
        ));
    }
    let numerics = build_numerics(&raw.numerics, &manifold)?;
    if numerics.tube_radius != manifold.tube_radius() {
        manifold = manifold
            .with_tube_radius(numerics.tube_radius)
            .map_err(|e| ScenarioError::Invalid(format!("numerics.tube_radius: {e}")))?;
    }
    Ok(Scenario {
        name: raw.scenario.name,
        description: raw.scenario.description,
        hash,
        manifold,
        problem,
        model,
        numerics,
    })
}

impl ToleranceProfile {
    pub fn mode(self) -> DerivativeMode {
        match self {
            Self::Analytic => DerivativeMode::Analytic,
            Self::Fd => DerivativeMode::FiniteDifference,
        }
    }
}
