use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use super::{CoefficientSet, JumpMeasure, LipschitzData, PathRecord, SdeProblem, SimError};
use crate::dsl::CoefficientSource;
use crate::field::{field, jump_field};
use crate::Vector;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown built-in model `{0}` (expected ex33, ex34, ex35 or decay)")]
pub struct UnknownModel(pub String);

/// Built-in models on ℝ³ started at `(cos β, sin β, 0)`.
///
/// * `Rotation`: rotation noise with drift `−½(0, x2, x3)`; stays on S².
/// * `DampedRotation`: same noise, drift `−3/2 (0, x2, x3)`; radius decays as `e^{−(s−t)}`.
/// * `ReflectedRotation`: `Rotation` plus reflection jumps `(x1, x2, x3) ↦ (x1, −x2, −x3)` at
///   rate `λ`, with the compensator folded into the drift; stays on S².
/// * `Decay`: drift `−x`, no noise; a control problem with exact solution
///   `x0 e^{−(s−t)}` and first-order Euler error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinModel {
    Rotation,
    DampedRotation,
    ReflectedRotation,
    Decay,
}

impl FromStr for BuiltinModel {
    type Err = UnknownModel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ex33" => Ok(Self::Rotation),
            "ex34" => Ok(Self::DampedRotation),
            "ex35" => Ok(Self::ReflectedRotation),
            "decay" => Ok(Self::Decay),
            other => Err(UnknownModel(other.to_string())),
        }
    }
}

impl fmt::Display for BuiltinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

fn v3(a: f64, b: f64, c: f64) -> Vector {
    Vector::from_column_slice(&[a, b, c])
}

/// DSL source of a built-in model, component by component.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSource {
    pub drift: [&'static str; 3],
    pub diffusion: Vec<[&'static str; 3]>,
    pub jump: Option<[&'static str; 3]>,
}

impl BuiltinModel {
    pub const ALL: [BuiltinModel; 4] = [
        Self::Rotation,
        Self::DampedRotation,
        Self::ReflectedRotation,
        Self::Decay,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Rotation => "ex33",
            Self::DampedRotation => "ex34",
            Self::ReflectedRotation => "ex35",
            Self::Decay => "decay",
        }
    }

    /// Whether the exact solution stays on the unit sphere.
    pub fn is_viable_on_sphere(self) -> bool {
        matches!(self, Self::Rotation | Self::ReflectedRotation)
    }

    /// Coefficients with analytic `⟨Dσ, σ⟩` attached.
    ///
    /// The arithmetic mirrors [`BuiltinModel::dsl_source`] operation for
    /// operation so both routes agree to the last bit.
    pub fn coefficients(self, lambda: f64) -> CoefficientSet {
        let rotation = || field(|_, x| v3(0.0, -x[2], x[1]));
        let rotation_self_derivative = || field(|_, x| v3(0.0, -x[1], -x[2]));
        let coeffs = match self {
            Self::Rotation => CoefficientSet::new(
                3,
                field(|_, x| v3(0.0, -0.5 * x[1], -0.5 * x[2])),
                vec![rotation()],
            ),
            Self::DampedRotation => CoefficientSet::new(
                3,
                field(|_, x| v3(0.0, -1.5 * x[1], -1.5 * x[2])),
                vec![rotation()],
            ),
            Self::ReflectedRotation => CoefficientSet::new(
                3,
                field(move |_, x| {
                    v3(
                        0.0,
                        -0.5 * x[1] - 2.0 * lambda * x[1],
                        -0.5 * x[2] - 2.0 * lambda * x[2],
                    )
                }),
                vec![rotation()],
            )
            .with_jump(jump_field(|_, x, _| v3(0.0, -2.0 * x[1], -2.0 * x[2]))),
            Self::Decay => {
                return CoefficientSet::new(3, field(|_, x| v3(-x[0], -x[1], -x[2])), vec![])
            }
        };
        coeffs
            .with_self_derivatives(vec![rotation_self_derivative()])
            .expect("one column, one oracle")
    }

    pub fn dsl_source(self) -> ModelSource {
        let rotation = ["0", "-x3", "x2"];
        match self {
            Self::Rotation => ModelSource {
                drift: ["0", "-0.5*x2", "-0.5*x3"],
                diffusion: vec![rotation],
                jump: None,
            },
            Self::DampedRotation => ModelSource {
                drift: ["0", "-1.5*x2", "-1.5*x3"],
                diffusion: vec![rotation],
                jump: None,
            },
            Self::ReflectedRotation => ModelSource {
                drift: ["0", "-0.5*x2 - 2*lambda*x2", "-0.5*x3 - 2*lambda*x3"],
                diffusion: vec![rotation],
                jump: Some(["0", "-2*x2", "-2*x3"]),
            },
            Self::Decay => ModelSource {
                drift: ["-x1", "-x2", "-x3"],
                diffusion: vec![],
                jump: None,
            },
        }
    }

    /// [`BuiltinModel::dsl_source`] as a compilable source with `lambda` bound.
    pub fn coefficient_source(self, lambda: f64) -> CoefficientSource {
        let src = self.dsl_source();
        let owned = |xs: &[&str; 3]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        CoefficientSource {
            state_dim: 3,
            mark_dim: if src.jump.is_some() { 1 } else { 0 },
            drift: owned(&src.drift),
            diffusion: src.diffusion.iter().map(owned).collect(),
            jump: src.jump.as_ref().map(owned),
            params: [("lambda".to_string(), lambda)].into_iter().collect(),
        }
    }

    /// `ReflectedRotation` jumps at rate `λ` with a single mark; `ρ ≡ 2`.
    pub fn jump_measure(self, lambda: f64) -> JumpMeasure {
        match self {
            Self::ReflectedRotation if lambda > 0.0 => {
                JumpMeasure::single(Vector::from_column_slice(&[1.0]), lambda)
                    .expect("positive intensity")
                    .with_rho(Arc::new(|_| 2.0))
            }
            _ => JumpMeasure::empty(),
        }
    }

    pub fn initial_state(beta: f64) -> Vector {
        v3(beta.cos(), beta.sin(), 0.0)
    }

    /// Lipschitz/growth constants valid on all of ℝ³.
    pub fn lipschitz(self, lambda: f64) -> LipschitzData {
        let (mu, rho_sq) = match self {
            Self::Rotation => (2.0, 0.0),
            Self::DampedRotation => (2.5, 0.0),
            Self::ReflectedRotation => (2.0 + 2.0 * lambda, 4.0 * lambda),
            Self::Decay => (1.0, 0.0),
        };
        LipschitzData::minimal(mu, rho_sq).expect("valid built-in constants")
    }

    pub fn problem(
        self,
        beta: f64,
        lambda: f64,
        t0: f64,
        horizon: f64,
    ) -> Result<SdeProblem, SimError> {
        SdeProblem::new(
            self.coefficients(lambda),
            self.jump_measure(lambda),
            t0,
            Self::initial_state(beta),
            horizon,
        )
    }
}

/// Closed-form solution evaluated on a grid from the driving noise.
///
/// `brownian[i] = W(s_i) − W(t0)` and `poisson[i] = N(s_i) − N(t0)`.
pub fn closed_form_oracle(
    model: BuiltinModel,
    beta: f64,
    _lambda: f64,
    t0: f64,
    times: &[f64],
    brownian: &[f64],
    poisson: &[u64],
) -> Result<Vec<Vector>, SimError> {
    if brownian.len() != times.len() || poisson.len() != times.len() {
        return Err(SimError::Invalid(format!(
            "noise paths have {} / {} nodes for {} times",
            brownian.len(),
            poisson.len(),
            times.len()
        )));
    }
    let (c, s) = (beta.cos(), beta.sin());
    Ok(times
        .iter()
        .zip(brownian)
        .zip(poisson)
        .map(|((&time, &w), &n)| match model {
            BuiltinModel::Rotation => v3(c, s * w.cos(), s * w.sin()),
            BuiltinModel::DampedRotation => {
                let r = s * (-(time - t0)).exp();
                v3(c, r * w.cos(), r * w.sin())
            }
            BuiltinModel::ReflectedRotation => {
                let phase = w + PI * n as f64;
                v3(c, s * phase.cos(), s * phase.sin())
            }
            BuiltinModel::Decay => BuiltinModel::initial_state(beta) * (-(time - t0)).exp(),
        })
        .collect())
}

/// [`closed_form_oracle`] driven by the noise recorded in a simulated path.
pub fn closed_form_for_path(
    model: BuiltinModel,
    beta: f64,
    lambda: f64,
    path: &PathRecord,
) -> Result<Vec<Vector>, SimError> {
    let w: Vec<f64> = path
        .brownian
        .iter()
        .map(|b| if b.is_empty() { 0.0 } else { b[0] })
        .collect();
    closed_form_oracle(
        model,
        beta,
        lambda,
        path.times[0],
        &path.times,
        &w,
        &path.jump_counts(),
    )
}
