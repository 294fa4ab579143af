//! Pointwise viability conditions on `K` and their sampled aggregation.
//!
//! At `x̄ ∈ K` and every unit normal `m` the checker evaluates
//!
//! ```text
//! drift:    2⟨b, m⟩ − Σ_α ⟨⟨Dσ_α, σ_α⟩, m⟩ − 2 Σ_e ⟨γ(t, x̄, e), m⟩ w(e)
//! tangency: ⟨σ_α, m⟩                         for every column α
//! jump:     d_K(x̄ + γ(t, x̄, e))             for every mark e
//! ```
//!
//! All three must vanish for the solution to stay on `K`. The check runs on
//! a finite sample of `(t, x̄)`, so a PASS is a sampled certificate rather
//! than a proof.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::manifold::{GeometryError, ImplicitManifold};
pub use crate::sde::DerivativeMode;
use crate::sde::{CoefficientSet, JumpMeasure, SimError, DEFAULT_FD_STEP};
use crate::Vector;

/// Failure of a checker evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("jump of mark {mark} leaves the projection domain")]
    JumpOutsideDomain { mark: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn and(self, other: Verdict) -> Verdict {
        Verdict::from_pass(self.is_pass() && other.is_pass())
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// PASS thresholds for the three condition families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub drift: f64,
    pub tangency: f64,
    pub jump: f64,
}

impl Tolerances {
    pub const ANALYTIC: Tolerances = Tolerances {
        drift: 1e-6,
        tangency: 1e-6,
        jump: 1e-8,
    };
    pub const FINITE_DIFFERENCE: Tolerances = Tolerances {
        drift: 1e-4,
        tangency: 1e-4,
        jump: 1e-8,
    };

    pub fn for_mode(mode: DerivativeMode) -> Self {
        match mode {
            DerivativeMode::Analytic => Self::ANALYTIC,
            DerivativeMode::FiniteDifference => Self::FINITE_DIFFERENCE,
        }
    }
}

/// How derivatives are taken and which thresholds apply.
///
/// With `tolerances: None` the thresholds follow the derivative mode that is
/// actually used: analytic only when the coefficients carry closed-form
/// `⟨Dσ_α, σ_α⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub mode: DerivativeMode,
    pub tolerances: Option<Tolerances>,
    pub fd_step: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            mode: DerivativeMode::Analytic,
            tolerances: None,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

impl CheckOptions {
    pub fn finite_difference() -> Self {
        Self {
            mode: DerivativeMode::FiniteDifference,
            ..Self::default()
        }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tolerances = Some(tol);
        self
    }

    /// Derivative mode in effect for `coeffs` and the matching thresholds.
    pub fn resolve(&self, coeffs: &CoefficientSet) -> (DerivativeMode, Tolerances) {
        let mode = if self.mode == DerivativeMode::Analytic
            && (coeffs.has_analytic_derivatives() || coeffs.dim_noise() == 0)
        {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::FiniteDifference
        };
        (
            mode,
            self.tolerances
                .unwrap_or_else(|| Tolerances::for_mode(mode)),
        )
    }
}

/// Residuals of the three conditions at one `(t, x̄)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResiduals {
    pub point: Vector,
    pub time: f64,
    /// One entry per normal vector.
    pub drift: Vec<f64>,
    /// `⟨σ_α, m_i⟩` at index `α · codim + i`.
    pub tangency: Vec<f64>,
    /// One entry per mark.
    pub jump: Vec<f64>,
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

impl ConditionResiduals {
    pub fn max_drift(&self) -> f64 {
        max_abs(&self.drift)
    }

    pub fn max_tangency(&self) -> f64 {
        max_abs(&self.tangency)
    }

    pub fn max_jump(&self) -> f64 {
        max_abs(&self.jump)
    }

    /// Largest residual measured in units of its tolerance.
    pub fn severity(&self, tol: &Tolerances) -> f64 {
        (self.max_drift() / tol.drift)
            .max(self.max_tangency() / tol.tangency)
            .max(self.max_jump() / tol.jump)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViabilityReport {
    pub samples: Vec<ConditionResiduals>,
    pub max_drift: f64,
    pub max_tangency: f64,
    pub max_jump: f64,
    pub drift_verdict: Verdict,
    pub tangency_verdict: Verdict,
    pub jump_verdict: Verdict,
    pub verdict: Verdict,
    pub tolerances: Tolerances,
    pub mode: DerivativeMode,
    /// Index into `samples` of the largest violation relative to tolerance.
    pub worst: usize,
    pub n_times: usize,
    pub n_points: usize,
}

impl ViabilityReport {
    fn from_samples(
        samples: Vec<ConditionResiduals>,
        tolerances: Tolerances,
        mode: DerivativeMode,
        n_times: usize,
        n_points: usize,
    ) -> Self {
        let max_drift = samples.iter().map(|s| s.max_drift()).fold(0.0, f64::max);
        let max_tangency = samples.iter().map(|s| s.max_tangency()).fold(0.0, f64::max);
        let max_jump = samples.iter().map(|s| s.max_jump()).fold(0.0, f64::max);
        let worst = samples
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.severity(&tolerances)))
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            })
            .0;
        let drift_verdict = Verdict::from_pass(max_drift <= tolerances.drift);
        let tangency_verdict = Verdict::from_pass(max_tangency <= tolerances.tangency);
        let jump_verdict = Verdict::from_pass(max_jump <= tolerances.jump);
        Self {
            samples,
            max_drift,
            max_tangency,
            max_jump,
            drift_verdict,
            tangency_verdict,
            jump_verdict,
            verdict: drift_verdict.and(tangency_verdict).and(jump_verdict),
            tolerances,
            mode,
            worst,
            n_times,
            n_points,
        }
    }

    pub fn worst_sample(&self) -> &ConditionResiduals {
        &self.samples[self.worst]
    }
}

/// `⟨Dσ_α, σ_α⟩(t, x)`.
pub fn directional_derivative_sigma(
    coeffs: &CoefficientSet,
    alpha: usize,
    t: f64,
    x: &Vector,
    mode: DerivativeMode,
    fd_step: f64,
) -> Result<Vector, SimError> {
    coeffs.self_derivative(alpha, t, x, mode, fd_step)
}

/// Compensator `Σ_e γ(t, x, e) w(e)`.
fn compensator(coeffs: &CoefficientSet, jumps: &JumpMeasure, t: f64, x: &Vector) -> Vector {
    jumps
        .marks()
        .iter()
        .fold(Vector::zeros(x.len()), |acc, mark| {
            acc + coeffs.jump(t, x, &mark.value) * mark.weight
        })
}

/// All residuals at `(t, x̄)` using the manifold's normal basis.
pub fn check_point(
    coeffs: &CoefficientSet,
    jumps: &JumpMeasure,
    manifold: &ImplicitManifold,
    t: f64,
    xbar: &Vector,
    options: &CheckOptions,
) -> Result<ConditionResiduals, CheckError> {
    let (mode, _) = options.resolve(coeffs);
    let normals = manifold.normal_basis(xbar)?;
    let drift = coeffs.drift(t, xbar);
    let sigmas: Vec<Vector> = (0..coeffs.dim_noise())
        .map(|a| coeffs.diffusion_column(a, t, xbar))
        .collect();
    let mut correction = Vector::zeros(xbar.len());
    for alpha in 0..coeffs.dim_noise() {
        correction += directional_derivative_sigma(coeffs, alpha, t, xbar, mode, options.fd_step)?;
    }
    let comp = compensator(coeffs, jumps, t, xbar);

    let drift_res: Vec<f64> = normals
        .vectors
        .iter()
        .map(|m| 2.0 * drift.dot(m) - correction.dot(m) - 2.0 * comp.dot(m))
        .collect();
    let tangency: Vec<f64> = sigmas
        .iter()
        .flat_map(|s| normals.vectors.iter().map(move |m| s.dot(m)))
        .collect();
    let jump = jumps
        .marks()
        .iter()
        .map(|mark| {
            let g = coeffs.jump(t, xbar, &mark.value);
            if g.iter().all(|c| *c == 0.0) {
                Ok(0.0)
            } else {
                manifold.distance(&(xbar + g))
            }
        })
        .collect::<Result<Vec<f64>, GeometryError>>()?;

    let all = drift_res.iter().chain(&tangency).chain(&jump);
    if !all.clone().all(|v| v.is_finite()) {
        return Err(SimError::NonFinite {
            what: "condition residual",
            t,
            x: xbar.iter().copied().collect(),
        }
        .into());
    }
    Ok(ConditionResiduals {
        point: xbar.clone(),
        time: t,
        drift: drift_res,
        tangency,
        jump,
    })
}

/// Runs [`check_point`] on every pair of `times × sample_manifold(count, seed)`.
pub fn check_manifold(
    coeffs: &CoefficientSet,
    jumps: &JumpMeasure,
    manifold: &ImplicitManifold,
    times: &[f64],
    sample_count: usize,
    options: &CheckOptions,
    seed: u64,
) -> Result<ViabilityReport, CheckError> {
    let points = manifold.sample_manifold(sample_count, seed)?;
    check_points(coeffs, jumps, manifold, times, &points, options)
}

/// [`check_manifold`] on caller-supplied points of `K`.
pub fn check_points(
    coeffs: &CoefficientSet,
    jumps: &JumpMeasure,
    manifold: &ImplicitManifold,
    times: &[f64],
    points: &[Vector],
    options: &CheckOptions,
) -> Result<ViabilityReport, CheckError> {
    if times.is_empty() || points.is_empty() {
        return Err(CheckError::Invalid(
            "viability check needs at least one time and one point".into(),
        ));
    }
    let (mode, tolerances) = options.resolve(coeffs);
    let samples = times
        .par_iter()
        .flat_map_iter(|&t| points.iter().map(move |x| (t, x)))
        .map(|(t, x)| check_point(coeffs, jumps, manifold, t, x, options))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ViabilityReport::from_samples(
        samples,
        tolerances,
        mode,
        times.len(),
        points.len(),
    ))
}

/// Drift residual in the form specific to round spheres centred at 0:
/// `2⟨b, x̄⟩ + Σ_α |σ_α|² − 2 Σ_e ⟨γ, x̄⟩ w(e)`, with `x̄` scaled to unit length.
pub fn sphere_form_drift_residual(
    coeffs: &CoefficientSet,
    jumps: &JumpMeasure,
    t: f64,
    xbar: &Vector,
) -> f64 {
    let n = xbar / xbar.norm();
    let r = xbar.norm();
    let sigma_sq: f64 = (0..coeffs.dim_noise())
        .map(|a| coeffs.diffusion_column(a, t, xbar).norm_squared())
        .sum();
    2.0 * coeffs.drift(t, xbar).dot(&n) + sigma_sq / r
        - 2.0 * compensator(coeffs, jumps, t, xbar).dot(&n)
}

/// Uniform grid of `count` times on `[t0, t1]`, endpoints included.
pub fn time_grid(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}
