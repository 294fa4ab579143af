//! Coefficient sets assembled from expression sources.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{compile_field, compile_jump_field, parse, DslError, Expr, Scope};
use crate::sde::CoefficientSet;

/// A [`DslError`] tagged with the coefficient entry it came from,
/// e.g. `drift[2]` or `diffusion[1][3]` (1-based).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{location}: {error}")]
pub struct SourceError {
    pub location: String,
    pub error: DslError,
}

/// Expression sources for `b`, the columns `σ_α` and `γ`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefficientSource {
    pub state_dim: usize,
    pub mark_dim: usize,
    /// `state_dim` expressions.
    pub drift: Vec<String>,
    /// One entry per noise column, each with `state_dim` expressions.
    pub diffusion: Vec<Vec<String>>,
    pub jump: Option<Vec<String>>,
    pub params: BTreeMap<String, f64>,
}

fn parse_all(sources: &[String], what: &str, state_dim: usize) -> Result<Vec<Expr>, SourceError> {
    if sources.len() != state_dim {
        return Err(SourceError {
            location: what.to_string(),
            error: DslError::Dimension {
                expected: state_dim,
                found: sources.len(),
            },
        });
    }
    sources
        .iter()
        .enumerate()
        .map(|(i, s)| {
            parse(s).map_err(|error| SourceError {
                location: format!("{what}[{}]", i + 1),
                error,
            })
        })
        .collect()
}

/// Resolves variables up front so an unknown name is reported with its
/// location rather than as a NaN at run time.
fn check_scope(exprs: &[Expr], scope: &Scope, what: &str) -> Result<(), SourceError> {
    for (i, e) in exprs.iter().enumerate() {
        e.compile(scope).map_err(|error| SourceError {
            location: format!("{what}[{}]", i + 1),
            error,
        })?;
    }
    Ok(())
}

impl CoefficientSource {
    pub fn scope(&self) -> Scope {
        Scope {
            state_dim: self.state_dim,
            mark_dim: self.mark_dim,
            params: self.params.clone(),
        }
    }

    /// Parses and compiles every entry. Derivatives of `σ` are left to
    /// finite differences.
    pub fn compile(&self) -> Result<CoefficientSet, SourceError> {
        let m = self.state_dim;
        let scope = self.scope();
        let field_scope = Scope {
            mark_dim: 0,
            ..scope.clone()
        };
        let drift = parse_all(&self.drift, "drift", m)?;
        check_scope(&drift, &field_scope, "drift")?;
        let drift = compile_field(&drift, &field_scope).expect("checked");
        let mut columns = Vec::with_capacity(self.diffusion.len());
        for (a, col) in self.diffusion.iter().enumerate() {
            let what = format!("diffusion[{}]", a + 1);
            let exprs = parse_all(col, &what, m)?;
            check_scope(&exprs, &field_scope, &what)?;
            columns.push(compile_field(&exprs, &field_scope).expect("checked"));
        }
        let mut coeffs = CoefficientSet::new(m, drift, columns);
        if let Some(jump) = &self.jump {
            let exprs = parse_all(jump, "jump", m)?;
            check_scope(&exprs, &scope, "jump")?;
            coeffs = coeffs.with_jump(compile_jump_field(&exprs, &scope).expect("checked"));
        }
        Ok(coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vector;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn compiles_rotation_model() {
        let src = CoefficientSource {
            state_dim: 3,
            drift: strings(&["0", "-0.5*x2", "-0.5*x3"]),
            diffusion: vec![strings(&["0", "-x3", "x2"])],
            ..Default::default()
        };
        let c = src.compile().unwrap();
        let x = Vector::from_column_slice(&[0.1, 0.2, 0.4]);
        assert_eq!(
            c.drift(0.0, &x),
            Vector::from_column_slice(&[0.0, -0.1, -0.2])
        );
        assert_eq!(
            c.diffusion_column(0, 0.0, &x),
            Vector::from_column_slice(&[0.0, -0.4, 0.2])
        );
    }

    #[test]
    fn errors_carry_location() {
        let src = CoefficientSource {
            state_dim: 2,
            drift: strings(&["x1", "x1 +"]),
            ..Default::default()
        };
        assert_eq!(src.compile().unwrap_err().location, "drift[2]");
        let src = CoefficientSource {
            state_dim: 2,
            drift: strings(&["x1", "x2"]),
            diffusion: vec![strings(&["x3", "0"])],
            ..Default::default()
        };
        let err = src.compile().unwrap_err();
        assert_eq!(err.location, "diffusion[1][1]");
        assert!(matches!(err.error, DslError::Unresolved { .. }));
        let src = CoefficientSource {
            state_dim: 2,
            drift: strings(&["x1"]),
            ..Default::default()
        };
        assert!(matches!(
            src.compile().unwrap_err().error,
            DslError::Dimension { .. }
        ));
    }

    #[test]
    fn marks_only_in_jump() {
        let src = CoefficientSource {
            state_dim: 1,
            mark_dim: 1,
            drift: strings(&["e1"]),
            ..Default::default()
        };
        assert!(src.compile().is_err());
        let src = CoefficientSource {
            state_dim: 1,
            mark_dim: 1,
            drift: strings(&["0"]),
            jump: Some(strings(&["e1 * x1"])),
            ..Default::default()
        };
        let c = src.compile().unwrap();
        let g = c.jump(
            0.0,
            &Vector::from_element(1, 3.0),
            &Vector::from_element(1, 2.0),
        );
        assert_eq!(g[0], 6.0);
    }
}
