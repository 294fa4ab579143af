//! Jump-diffusion simulation and stochastic viability checks on closed
//! submanifolds of ℝ^m.
//!
//! The crate is organised around the pieces needed to decide whether the
//! solution of
//!
//! ```text
//! X_s = x + ∫ b(r, X_r) dr + ∫ σ(r, X_r) dW_r + ∫∫ γ(r, X_{r-}, e) Ñ(dr de)
//! ```
//!
//! stays on a closed submanifold `K`:
//!
//! * [`sde`] simulates the equation (Euler–Maruyama with compensated jumps)
//!   and carries the built-in sphere models with their closed-form solutions.
//! * [`manifold`] provides projection, squared distance and its derivatives,
//!   normal bases and tube sampling for implicitly defined `K`.
//! * [`viability`] evaluates the pointwise drift / tangency / jump conditions.
//! * [`supersolution`] checks that `d²_K` satisfies the generator inequality
//!   on a tube around `K`.
//! * [`montecarlo`] runs seeded path ensembles, strong-error ladders and the
//!   checker/simulator coherence test.
//! * [`dsl`] is the small expression language used to define coefficients.

// `!(a <= b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsl;
pub mod field;
pub mod manifold;
pub mod montecarlo;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod supersolution;
pub mod viability;

pub use field::{Field, JumpField};
pub use manifold::{GeometryError, ImplicitManifold, NormalBasis};
pub use montecarlo::{EnsembleConfig, EnsembleStats, MonteCarloError};
pub use sde::{
    BuiltinModel, CoefficientSet, DerivativeMode, JumpMeasure, LipschitzData, PathRecord,
    SdeProblem, SimError,
};
pub use supersolution::{SupersolutionReport, TubeGrid};
pub use viability::{
    CheckError, CheckOptions, ConditionResiduals, Tolerances, Verdict, ViabilityReport,
};

/// Column vector in ℝ^m; all geometry and dynamics use this type.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix (Jacobians, Hessians).
pub type Matrix = nalgebra::DMatrix<f64>;
