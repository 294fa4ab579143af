//! Tube inequality for `d²_K` and the bounds on `V_σ d²_K`.
//!
//! For `x` in the tube the checker evaluates
//!
//! ```text
//! G(t, x) = ⟨∇d², b⟩ + ½ tr[D²d² σσᵀ] + Σ_e [d²(x + γ) − d²(x) − ⟨∇d², γ⟩] w(e)
//! ```
//!
//! and the slack `G − (C − 1) d²`. The function `d²_K` is a supersolution on
//! the sampled tube when every slack is non-positive (up to `slack_tol`).

use rayon::prelude::*;

use crate::manifold::{GeometryError, ImplicitManifold};
use crate::sde::{CoefficientSet, DerivativeMode, JumpMeasure, LipschitzData, DEFAULT_FD_STEP};
use crate::viability::{CheckError, Verdict};
use crate::{Matrix, Vector};

/// Points with `d² < EXCLUDE_DIST2` are left out of the ratio bounds.
pub const EXCLUDE_DIST2: f64 = 1e-14;
/// Numerators below `RATIO_NOISE_FLOOR · (1 + |σ|²)` count as zero.
pub const RATIO_NOISE_FLOOR: f64 = 1e-12;

/// Sample points of the tube and the times at which they are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeGrid {
    pub points: Vec<Vector>,
    pub times: Vec<f64>,
    pub radius: f64,
}

impl TubeGrid {
    /// Offsets uniform in `(0, radius]`.
    pub fn sample(
        manifold: &ImplicitManifold,
        count: usize,
        radius: f64,
        times: Vec<f64>,
        seed: u64,
    ) -> Result<Self, GeometryError> {
        Self::sample_shell(manifold, count, 0.0, radius, times, seed)
    }

    /// Offsets uniform in `(inner_fraction · radius, radius]`. Grids with the
    /// same seed and fraction are rescaled copies of each other.
    pub fn sample_shell(
        manifold: &ImplicitManifold,
        count: usize,
        inner_fraction: f64,
        radius: f64,
        times: Vec<f64>,
        seed: u64,
    ) -> Result<Self, GeometryError> {
        let points = manifold
            .sample_tube_shell(count, inner_fraction * radius, radius, seed)?
            .into_iter()
            .map(|p| p.point)
            .collect();
        Ok(Self {
            points,
            times,
            radius,
        })
    }

    /// `count` midpoint times strictly inside `(t0, t1)`.
    pub fn interior_times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| t0 + (t1 - t0) * (i as f64 + 0.5) / count as f64)
            .collect()
    }
}

/// Geometric ladder `{r, r/2, r/4, r/8}`.
pub fn radius_ladder(radius: f64) -> [f64; 4] {
    [radius, radius / 2.0, radius / 4.0, radius / 8.0]
}

/// Which Hessian of `d²_K` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianMode {
    /// Closed form when the manifold has one, else central differences.
    Auto,
    FiniteDifference,
}

fn hessian(
    manifold: &ImplicitManifold,
    x: &Vector,
    mode: HessianMode,
) -> Result<Matrix, GeometryError> {
    match mode {
        HessianMode::Auto => manifold.hess_dist2(x),
        HessianMode::FiniteDifference => {
            manifold.project(x)?;
            manifold.hess_dist2_fd(x)
        }
    }
}

/// `d²_K` at a post-jump point. Manifolds with a global projection accept
/// any point; otherwise the point must lie in the tube.
fn post_jump_dist2(
    manifold: &ImplicitManifold,
    y: &Vector,
    mark: usize,
) -> Result<f64, CheckError> {
    manifold.dist2(y).map_err(|e| match e {
        GeometryError::OutsideTube { .. }
        | GeometryError::Ambiguous { .. }
        | GeometryError::NoConvergence { .. } => CheckError::JumpOutsideDomain { mark },
        other => other.into(),
    })
}

/// `G(t, x)` with the given Hessian mode.
pub fn generator_apply_with(
    coeffs: &CoefficientSet,
    jumps: &JumpMeasure,
    manifold: &ImplicitManifold,
    t: f64,
    x: &Vector,
    mode: HessianMode,
) -> Result<f64, CheckError> {
    let d2 = manifold.dist2(x)?;
    let grad = manifold.grad_dist2(x)?;
    let hess = hessian(manifold, x, mode)?;
    let mut value = grad.dot(&coeffs.drift(t, x));
    for alpha in 0..coeffs.dim_noise() {
        let s = coeffs.diffusion_column(alpha, t, x);
        value += 0.5 * s.dot(&(&hess * &s));
    }
    for (i, mark) in jumps.marks().iter().enumerate() {
        let g = coeffs.jump(t, x, &mark.value);
        let after = post_jump_dist2(manifold, &(x + &g), i)?;
        value += (after - d2 - grad.dot(&g)) * mark.weight;
    }
    if !value.is_finite() {
        return Err(CheckError::Simulation(crate::sde::SimError::NonFinite {
            what: "generator",
            t,
            x: x.iter().copied().collect(),
        }));
    }
    Ok(value)
}

/// `G(t, x)` using the closed-form Hessian where available.
pub fn generator_apply(
    coeffs: &CoefficientSet,
    jumps: &JumpMeasure,
    manifold: &ImplicitManifold,
    t: f64,
    x: &Vector,
) -> Result<f64, CheckError> {
    generator_apply_with(coeffs, jumps, manifold, t, x, HessianMode::Auto)
}

/// One evaluated tube point.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackRow {
    pub time: f64,
    pub point: Vector,
    pub distance: f64,
    pub generator: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionReport {
    pub rows: Vec<SlackRow>,
    pub radius: f64,
    pub c: f64,
    pub c_estimated: bool,
    pub max_slack: f64,
    pub slack_tol: f64,
    /// Points skipped because a jump left the projection domain.
    pub skipped: usize,
    pub verdict: Verdict,
}

/// Slack threshold: `1e-10` with a closed-form Hessian, `1e-6` with
/// finite differences.
pub fn default_slack_tol(manifold: &ImplicitManifold, mode: HessianMode) -> f64 {
    if manifold.has_analytic() && mode == HessianMode::Auto {
        1e-10
    } else {
        1e-6
    }
}

pub fn check_supersolution(
    coeffs: &CoefficientSet,
    jumps: &JumpMeasure,
    manifold: &ImplicitManifold,
    lip: &LipschitzData,
    grid: &TubeGrid,
) -> Result<SupersolutionReport, CheckError> {
    let tol = default_slack_tol(manifold, HessianMode::Auto);
    check_supersolution_with(coeffs, jumps, manifold, lip, grid, HessianMode::Auto, tol)
}

pub fn check_supersolution_with(
    coeffs: &CoefficientSet,
    jumps: &JumpMeasure,
    manifold: &ImplicitManifold,
    lip: &LipschitzData,
    grid: &TubeGrid,
    mode: HessianMode,
    slack_tol: f64,
) -> Result<SupersolutionReport, CheckError> {
    if grid.points.is_empty() || grid.times.is_empty() {
        return Err(CheckError::Invalid("tube grid is empty".into()));
    }
    let c = lip.c();
    let evaluated: Vec<Option<SlackRow>> = grid
        .times
        .par_iter()
        .flat_map_iter(|&t| grid.points.iter().map(move |x| (t, x)))
        .map(|(t, x)| {
            let d2 = manifold.dist2(x)?;
            match generator_apply_with(coeffs, jumps, manifold, t, x, mode) {
                Ok(generator) => Ok(Some(SlackRow {
                    time: t,
                    point: x.clone(),
                    distance: d2.sqrt(),
                    generator,
                    slack: generator - (c - 1.0) * d2,
                })),
                Err(CheckError::JumpOutsideDomain { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, CheckError>>()?;
    let skipped = evaluated.iter().filter(|r| r.is_none()).count();
    let rows: Vec<SlackRow> = evaluated.into_iter().flatten().collect();
    let max_slack = rows
        .iter()
        .map(|r| r.slack)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SupersolutionReport {
        verdict: Verdict::from_pass(!rows.is_empty() && max_slack <= slack_tol),
        rows,
        radius: grid.radius,
        c,
        c_estimated: lip.is_estimated(),
        max_slack,
        slack_tol,
        skipped,
    })
}

/// Runs [`check_supersolution`] on shells of every radius of
/// [`radius_ladder`], sharing the seed so the grids are rescaled copies.
#[allow(clippy::too_many_arguments)]
pub fn check_supersolution_ladder(
    coeffs: &CoefficientSet,
    jumps: &JumpMeasure,
    manifold: &ImplicitManifold,
    lip: &LipschitzData,
    radius: f64,
    count: usize,
    times: &[f64],
    seed: u64,
) -> Result<Vec<SupersolutionReport>, CheckError> {
    radius_ladder(radius)
        .iter()
        .map(|&r| {
            let grid = TubeGrid::sample(manifold, count, r, times.to_vec(), seed)?;
            check_supersolution(coeffs, jumps, manifold, lip, &grid)
        })
        .collect()
}

/// Measured bounds `max |V_σ d²| / d²` and `max |V_σ V_σ d²| / d²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorFieldRatios {
    pub first: f64,
    pub second: f64,
    /// Points used (with `d² ≥ EXCLUDE_DIST2`).
    pub counted: usize,
    pub excluded: usize,
}

/// `V_σ d² = ⟨∇d², σ⟩` and `V_σ V_σ d² = σᵀ D²d² σ + ⟨∇d², ⟨Dσ, σ⟩⟩`,
/// divided by `d²` and maximised over the grid and the columns.
pub fn vector_field_ratios(
    coeffs: &CoefficientSet,
    manifold: &ImplicitManifold,
    grid: &TubeGrid,
    mode: DerivativeMode,
) -> Result<VectorFieldRatios, CheckError> {
    let per_point: Vec<Option<(f64, f64)>> = grid
        .times
        .par_iter()
        .flat_map_iter(|&t| grid.points.iter().map(move |x| (t, x)))
        .map(|(t, x)| -> Result<Option<(f64, f64)>, CheckError> {
            let d2 = manifold.dist2(x)?;
            if d2 < EXCLUDE_DIST2 {
                return Ok(None);
            }
            let grad = manifold.grad_dist2(x)?;
            let hess = manifold.hess_dist2(x)?;
            let (mut first, mut second) = (0.0_f64, 0.0_f64);
            for alpha in 0..coeffs.dim_noise() {
                let s = coeffs.diffusion_column(alpha, t, x);
                let floor = RATIO_NOISE_FLOOR * (1.0 + s.norm_squared());
                let ds = coeffs.self_derivative(alpha, t, x, mode, DEFAULT_FD_STEP)?;
                let v1 = grad.dot(&s);
                let v2 = s.dot(&(&hess * &s)) + grad.dot(&ds);
                let clip = |v: f64| if v.abs() < floor { 0.0 } else { v.abs() };
                first = first.max(clip(v1) / d2);
                second = second.max(clip(v2) / d2);
            }
            Ok(Some((first, second)))
        })
        .collect::<Result<_, _>>()?;
    let counted = per_point.iter().filter(|p| p.is_some()).count();
    let (first, second) = per_point
        .iter()
        .flatten()
        .fold((0.0_f64, 0.0_f64), |(a, b), (f, s)| (a.max(*f), b.max(*s)));
    Ok(VectorFieldRatios {
        first,
        second,
        counted,
        excluded: per_point.len() - counted,
    })
}
