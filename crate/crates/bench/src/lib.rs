//! Shared fixtures for the criterion benches.

use svpkit::dsl::{parse, Compiled, Scope};
use svpkit::sde::BuiltinModel;
use svpkit::{ImplicitManifold, SdeProblem, Vector};

pub const SEED: u64 = 0xbe7c;

/// Reflection-jump sphere model on `[0, 1]`.
pub fn jump_problem() -> SdeProblem {
    BuiltinModel::ReflectedRotation
        .problem(0.7, 1.0, 0.0, 1.0)
        .expect("valid built-in problem")
}

pub fn torus() -> ImplicitManifold {
    ImplicitManifold::torus(2.0, 0.5).expect("valid torus")
}

/// `count` tube points at distance up to `radius`.
pub fn tube_points(manifold: &ImplicitManifold, count: usize, radius: f64) -> Vec<Vector> {
    manifold
        .sample_tube(count, radius, SEED)
        .expect("tube sampling")
        .into_iter()
        .map(|p| p.point)
        .collect()
}

pub fn compiled_expression() -> Compiled {
    parse("sin(x1) * exp(-t/2) + sqrt(x2^2 + 1) - 3*x3/(1 + abs(e1))")
        .and_then(|e| e.compile(&Scope::new(3, 1)))
        .expect("fixture expression compiles")
}
