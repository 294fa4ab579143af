//! The jump-diffusion model, its Euler–Maruyama simulator and the built-in
//! sphere examples.

mod builtin;
mod coefficients;
mod jumps;
mod lipschitz;
mod scheme;

pub use builtin::{closed_form_for_path, closed_form_oracle, BuiltinModel, UnknownModel};
pub use coefficients::{CoefficientSet, DerivativeMode, DEFAULT_FD_STEP};
pub use jumps::{sample_jump_times, JumpMeasure, Mark, RhoFn};
pub use lipschitz::{LipschitzData, LipschitzQuotients};
pub use scheme::{euler_step, simulate, simulate_with_jumps, JumpEvent, PathRecord, StepOutcome};

use thiserror::Error;

use crate::Vector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("non-finite {what} at t = {t}, x = {x:?}")]
    NonFinite {
        what: &'static str,
        t: f64,
        x: Vec<f64>,
    },
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<SimError>,
    },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

impl SimError {
    pub(crate) fn non_finite(what: &'static str, t: f64, x: &Vector) -> Self {
        SimError::NonFinite {
            what,
            t,
            x: x.iter().copied().collect(),
        }
    }
}

pub(crate) fn ensure_finite(
    v: Vector,
    what: &'static str,
    t: f64,
    x: &Vector,
) -> Result<Vector, SimError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(SimError::non_finite(what, t, x))
    }
}

/// An initial-value problem for the jump diffusion on `[t0, horizon]`.
#[derive(Clone, Debug)]
pub struct SdeProblem {
    pub coefficients: CoefficientSet,
    pub jumps: JumpMeasure,
    pub t0: f64,
    pub x0: Vector,
    pub horizon: f64,
}

impl SdeProblem {
    pub fn new(
        coefficients: CoefficientSet,
        jumps: JumpMeasure,
        t0: f64,
        x0: Vector,
        horizon: f64,
    ) -> Result<Self, SimError> {
        if x0.len() != coefficients.dim_state() {
            return Err(SimError::Invalid(format!(
                "initial state has dimension {}, coefficients expect {}",
                x0.len(),
                coefficients.dim_state()
            )));
        }
        if !t0.is_finite() || !horizon.is_finite() {
            return Err(SimError::Invalid("time interval must be finite".into()));
        }
        if horizon < t0 {
            return Err(SimError::Invalid(format!(
                "horizon {horizon} precedes start time {t0}"
            )));
        }
        if !x0.iter().all(|v| v.is_finite()) {
            return Err(SimError::Invalid("initial state must be finite".into()));
        }
        Ok(Self {
            coefficients,
            jumps,
            t0,
            x0,
            horizon,
        })
    }
}

/// Itô → Stratonovich drift: `b − ½ Σ_α ⟨Dσ_α, σ_α⟩`.
///
/// In this form the drift condition on `K` reads as plain tangency of the
/// corrected drift (once the jump compensator is accounted for).
pub fn ito_to_stratonovich_drift(
    coeffs: &CoefficientSet,
    t: f64,
    x: &Vector,
    mode: DerivativeMode,
    fd_step: f64,
) -> Result<Vector, SimError> {
    let mut drift = ensure_finite(coeffs.drift(t, x), "drift", t, x)?;
    for alpha in 0..coeffs.dim_noise() {
        drift -= coeffs.self_derivative(alpha, t, x, mode, fd_step)? * 0.5;
    }
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn constant_sigma_leaves_drift_unchanged() {
        let coeffs = CoefficientSet::new(
            2,
            field(|_, x| v(&[x[1], -x[0]])),
            vec![field(|_, _| v(&[0.3, 0.1]))],
        );
        let x = v(&[0.4, -1.2]);
        for mode in [DerivativeMode::Analytic, DerivativeMode::FiniteDifference] {
            let s = ito_to_stratonovich_drift(&coeffs, 0.0, &x, mode, DEFAULT_FD_STEP).unwrap();
            assert_eq!(s, coeffs.drift(0.0, &x));
        }
    }

    #[test]
    fn stratonovich_drift_of_sphere_examples() {
        let x = v(&[0.3, -0.5, 0.8]);
        for mode in [DerivativeMode::Analytic, DerivativeMode::FiniteDifference] {
            let c33 = BuiltinModel::Rotation.coefficients(0.0);
            let s = ito_to_stratonovich_drift(&c33, 0.0, &x, mode, DEFAULT_FD_STEP).unwrap();
            assert!(s.norm() < 1e-10, "{s}");
            let c34 = BuiltinModel::DampedRotation.coefficients(0.0);
            let s = ito_to_stratonovich_drift(&c34, 0.0, &x, mode, DEFAULT_FD_STEP).unwrap();
            assert!((s - v(&[0.0, 0.5, -0.8])).norm() < 1e-10);
            // not tangent: ⟨b_strat, x⟩ = −(x2² + x3²) on S²
        }
    }

    #[test]
    fn problem_validation() {
        let coeffs = CoefficientSet::zero(3, 1);
        assert!(SdeProblem::new(
            coeffs.clone(),
            JumpMeasure::empty(),
            0.0,
            v(&[1.0, 0.0]),
            1.0
        )
        .is_err());
        assert!(SdeProblem::new(
            coeffs.clone(),
            JumpMeasure::empty(),
            1.0,
            v(&[1.0, 0.0, 0.0]),
            0.5
        )
        .is_err());
        assert!(
            SdeProblem::new(coeffs, JumpMeasure::empty(), 0.0, v(&[1.0, 0.0, 0.0]), 0.0).is_ok()
        );
    }
}
