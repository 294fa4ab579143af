use std::fmt;

use super::{ensure_finite, SimError};
use crate::field::{zero_field, Field, JumpField};
use crate::Vector;

/// Step of the central difference used for `⟨Dσ_α, σ_α⟩`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// How `⟨Dσ_α, σ_α⟩` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    /// Use the attached closed-form oracle, falling back to finite
    /// differences for columns without one.
    Analytic,
    /// Always use central differences along `σ_α`.
    FiniteDifference,
}

/// Drift `b`, diffusion columns `σ_α` and jump amplitude `γ`.
#[derive(Clone)]
pub struct CoefficientSet {
    dim_state: usize,
    drift: Field,
    diffusion: Vec<Field>,
    jump: Option<JumpField>,
    self_derivatives: Option<Vec<Field>>,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("dim_state", &self.dim_state)
            .field("dim_noise", &self.diffusion.len())
            .field("has_jump", &self.jump.is_some())
            .field("analytic_derivatives", &self.self_derivatives.is_some())
            .finish()
    }
}

impl CoefficientSet {
    /// `dim_noise` is the number of diffusion columns.
    pub fn new(dim_state: usize, drift: Field, diffusion: Vec<Field>) -> Self {
        Self {
            dim_state,
            drift,
            diffusion,
            jump: None,
            self_derivatives: None,
        }
    }

    /// All coefficients identically zero.
    pub fn zero(dim_state: usize, dim_noise: usize) -> Self {
        Self::new(
            dim_state,
            zero_field(dim_state),
            (0..dim_noise).map(|_| zero_field(dim_state)).collect(),
        )
    }

    pub fn with_jump(mut self, jump: JumpField) -> Self {
        self.jump = Some(jump);
        self
    }

    /// Attaches closed-form `⟨Dσ_α, σ_α⟩`, one field per diffusion column.
    pub fn with_self_derivatives(mut self, derivs: Vec<Field>) -> Result<Self, SimError> {
        if derivs.len() != self.diffusion.len() {
            return Err(SimError::Invalid(format!(
                "{} derivative oracles for {} diffusion columns",
                derivs.len(),
                self.diffusion.len()
            )));
        }
        self.self_derivatives = Some(derivs);
        Ok(self)
    }

    /// Drops the analytic derivative oracles.
    pub fn without_self_derivatives(mut self) -> Self {
        self.self_derivatives = None;
        self
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn dim_noise(&self) -> usize {
        self.diffusion.len()
    }

    pub fn has_jump(&self) -> bool {
        self.jump.is_some()
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.self_derivatives.is_some()
    }

    pub fn drift(&self, t: f64, x: &Vector) -> Vector {
        (self.drift)(t, x)
    }

    pub fn diffusion_column(&self, alpha: usize, t: f64, x: &Vector) -> Vector {
        (self.diffusion[alpha])(t, x)
    }

    /// `γ(t, x, e)`; zero when no jump field is attached.
    pub fn jump(&self, t: f64, x: &Vector, mark: &Vector) -> Vector {
        match &self.jump {
            Some(g) => g(t, x, mark),
            None => Vector::zeros(self.dim_state),
        }
    }

    /// `⟨Dσ_α, σ_α⟩(t, x)`: component `i` is `⟨∇σ_α^i, σ_α⟩`.
    ///
    /// The finite-difference route evaluates
    /// `[σ_α(x + ησ̂) − σ_α(x − ησ̂)] / (2η) · |σ_α|` with unit `σ̂`.
    pub fn self_derivative(
        &self,
        alpha: usize,
        t: f64,
        x: &Vector,
        mode: DerivativeMode,
        fd_step: f64,
    ) -> Result<Vector, SimError> {
        if mode == DerivativeMode::Analytic {
            if let Some(derivs) = &self.self_derivatives {
                return ensure_finite(derivs[alpha](t, x), "diffusion derivative", t, x);
            }
        }
        let sigma = ensure_finite(self.diffusion_column(alpha, t, x), "diffusion", t, x)?;
        let norm = sigma.norm();
        if norm == 0.0 {
            return Ok(Vector::zeros(self.dim_state));
        }
        let dir = &sigma / norm;
        let plus = self.diffusion_column(alpha, t, &(x + &dir * fd_step));
        let minus = self.diffusion_column(alpha, t, &(x - &dir * fd_step));
        ensure_finite(
            (plus - minus) * (norm / (2.0 * fd_step)),
            "diffusion derivative",
            t,
            x,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field;

    #[test]
    fn constant_sigma_has_zero_self_derivative() {
        let c = CoefficientSet::new(
            2,
            zero_field(2),
            vec![field(|_, _| Vector::from_vec(vec![1.0, 2.0]))],
        );
        let d = c
            .self_derivative(
                0,
                0.0,
                &Vector::from_vec(vec![3.0, 4.0]),
                DerivativeMode::FiniteDifference,
                DEFAULT_FD_STEP,
            )
            .unwrap();
        assert_eq!(d, Vector::zeros(2));
    }

    #[test]
    fn rotation_field_self_derivative() {
        // σ = (0, −x3, x2) ⇒ ⟨Dσ, σ⟩ = (0, −x2, −x3)
        let c = CoefficientSet::new(
            3,
            zero_field(3),
            vec![field(|_, x| Vector::from_vec(vec![0.0, -x[2], x[1]]))],
        );
        let x = Vector::from_vec(vec![0.2, 0.6, -0.7]);
        let d = c
            .self_derivative(
                0,
                0.0,
                &x,
                DerivativeMode::FiniteDifference,
                DEFAULT_FD_STEP,
            )
            .unwrap();
        assert!((d - Vector::from_vec(vec![0.0, -0.6, 0.7])).norm() < 1e-10);
    }

    #[test]
    fn non_finite_diffusion_is_an_error() {
        let c = CoefficientSet::new(
            1,
            zero_field(1),
            vec![field(|_, _| Vector::from_vec(vec![f64::NAN]))],
        );
        let err = c
            .self_derivative(
                0,
                0.5,
                &Vector::from_vec(vec![1.0]),
                DerivativeMode::Analytic,
                DEFAULT_FD_STEP,
            )
            .unwrap_err();
        assert!(matches!(err, SimError::NonFinite { t, .. } if t == 0.5));
    }

    #[test]
    fn derivative_oracle_count_checked() {
        let c = CoefficientSet::zero(2, 2);
        assert!(c
            .clone()
            .with_self_derivatives(vec![zero_field(2)])
            .is_err());
        assert!(c
            .with_self_derivatives(vec![zero_field(2), zero_field(2)])
            .is_ok());
    }
}
