//! Shared closure types for coefficient fields.

use std::sync::Arc;

use crate::Vector;

/// A time-dependent vector field `(t, x) -> v` on ℝ^m.
pub type Field = Arc<dyn Fn(f64, &Vector) -> Vector + Send + Sync>;

/// A jump amplitude `(t, x, e) -> γ(t, x, e)` indexed by a mark `e`.
pub type JumpField = Arc<dyn Fn(f64, &Vector, &Vector) -> Vector + Send + Sync>;

/// Wraps a closure as a [`Field`].
pub fn field<F>(f: F) -> Field
where
    F: Fn(f64, &Vector) -> Vector + Send + Sync + 'static,
{
    Arc::new(f)
}

/// Wraps a closure as a [`JumpField`].
pub fn jump_field<F>(f: F) -> JumpField
where
    F: Fn(f64, &Vector, &Vector) -> Vector + Send + Sync + 'static,
{
    Arc::new(f)
}

/// The identically zero field on ℝ^m.
pub fn zero_field(dim: usize) -> Field {
    Arc::new(move |_, _| Vector::zeros(dim))
}
