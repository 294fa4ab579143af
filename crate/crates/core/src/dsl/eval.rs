use std::collections::BTreeMap;
use std::sync::Arc;

use super::ast::{BinOp, Expr, Func, Var};
use super::DslError;
use crate::field::{Field, JumpField};
use crate::Vector;

fn finite(v: f64) -> Result<f64, DslError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DslError::Domain("non-finite result"))
    }
}

fn apply_binary(op: BinOp, a: f64, b: f64) -> Result<f64, DslError> {
    let v = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(DslError::Domain("division by zero"));
            }
            a / b
        }
        BinOp::Pow => a.powf(b),
    };
    finite(v)
}

fn apply_func(func: Func, a: f64) -> Result<f64, DslError> {
    let v = match func {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Exp => a.exp(),
        Func::Sqrt => {
            if a < 0.0 {
                return Err(DslError::Domain("square root of a negative number"));
            }
            a.sqrt()
        }
        Func::Abs => a.abs(),
    };
    finite(v)
}

/// Name → value map for direct evaluation of an [`Expr`].
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    values: BTreeMap<String, f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn time(mut self, t: f64) -> Self {
        self.values.insert("t".into(), t);
        self
    }

    pub fn state(mut self, x: &[f64]) -> Self {
        for (i, v) in x.iter().enumerate() {
            self.values.insert(format!("x{}", i + 1), *v);
        }
        self
    }

    pub fn mark(mut self, e: &[f64]) -> Self {
        for (i, v) in e.iter().enumerate() {
            self.values.insert(format!("e{}", i + 1), *v);
        }
        self
    }

    pub fn set(mut self, name: &str, value: f64) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    fn lookup(&self, var: &Var) -> Result<f64, DslError> {
        let name = var.to_string();
        if let Some(v) = self.values.get(&name) {
            return Ok(*v);
        }
        if name == "pi" {
            return Ok(std::f64::consts::PI);
        }
        Err(DslError::Unresolved { name })
    }
}

impl Expr {
    /// Evaluates against named bindings. Unbound names are errors.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, DslError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(v) => bindings.lookup(v),
            Expr::Neg(e) => Ok(-e.eval(bindings)?),
            Expr::Binary(op, a, b) => apply_binary(*op, a.eval(bindings)?, b.eval(bindings)?),
            Expr::Call(f, e) => apply_func(*f, e.eval(bindings)?),
        }
    }

    /// Resolves every variable against `scope`, producing a fast evaluator.
    pub fn compile(&self, scope: &Scope) -> Result<Compiled, DslError> {
        Ok(Compiled {
            root: resolve(self, scope)?,
        })
    }
}

/// Declared dimensions and parameter values an expression is checked against.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    pub state_dim: usize,
    pub mark_dim: usize,
    pub params: BTreeMap<String, f64>,
}

impl Scope {
    pub fn new(state_dim: usize, mark_dim: usize) -> Self {
        Self {
            state_dim,
            mark_dim,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Time,
    State(usize),
    Mark(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

fn resolve(expr: &Expr, scope: &Scope) -> Result<Node, DslError> {
    Ok(match expr {
        Expr::Num(v) => Node::Const(*v),
        Expr::Var(var) => match var {
            Var::Time => Node::Time,
            Var::State(i) if (1..=scope.state_dim).contains(i) => Node::State(i - 1),
            Var::Mark(i) if (1..=scope.mark_dim).contains(i) => Node::Mark(i - 1),
            Var::Param(name) => match scope.params.get(name) {
                Some(v) => Node::Const(*v),
                None if name == "pi" => Node::Const(std::f64::consts::PI),
                None => return Err(DslError::Unresolved { name: name.clone() }),
            },
            other => {
                return Err(DslError::Unresolved {
                    name: other.to_string(),
                })
            }
        },
        Expr::Neg(e) => Node::Neg(Box::new(resolve(e, scope)?)),
        Expr::Binary(op, a, b) => Node::Binary(
            *op,
            Box::new(resolve(a, scope)?),
            Box::new(resolve(b, scope)?),
        ),
        Expr::Call(f, e) => Node::Call(*f, Box::new(resolve(e, scope)?)),
    })
}

/// An expression with all names resolved to slots or constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    root: Node,
}

impl Compiled {
    pub fn eval(&self, t: f64, x: &[f64], e: &[f64]) -> Result<f64, DslError> {
        eval_node(&self.root, t, x, e)
    }
}

fn eval_node(node: &Node, t: f64, x: &[f64], e: &[f64]) -> Result<f64, DslError> {
    match node {
        Node::Const(v) => Ok(*v),
        Node::Time => Ok(t),
        Node::State(i) => Ok(x[*i]),
        Node::Mark(i) => Ok(e[*i]),
        Node::Neg(a) => Ok(-eval_node(a, t, x, e)?),
        Node::Binary(op, a, b) => apply_binary(*op, eval_node(a, t, x, e)?, eval_node(b, t, x, e)?),
        Node::Call(f, a) => apply_func(*f, eval_node(a, t, x, e)?),
    }
}

fn compile_all(exprs: &[Expr], scope: &Scope) -> Result<Arc<Vec<Compiled>>, DslError> {
    if exprs.len() != scope.state_dim {
        return Err(DslError::Dimension {
            expected: scope.state_dim,
            found: exprs.len(),
        });
    }
    Ok(Arc::new(
        exprs
            .iter()
            .map(|e| e.compile(scope))
            .collect::<Result<Vec<_>, _>>()?,
    ))
}

/// Compiles `m` component expressions into a vector field `(t, x) -> ℝ^m`.
///
/// Mark variables are not in scope. A component that hits a domain error
/// evaluates to NaN, which the simulator and checkers reject as non-finite.
pub fn compile_field(exprs: &[Expr], scope: &Scope) -> Result<Field, DslError> {
    let scope = Scope {
        mark_dim: 0,
        ..scope.clone()
    };
    let comps = compile_all(exprs, &scope)?;
    Ok(Arc::new(move |t, x: &Vector| {
        Vector::from_iterator(
            comps.len(),
            comps
                .iter()
                .map(|c| c.eval(t, x.as_slice(), &[]).unwrap_or(f64::NAN)),
        )
    }))
}

/// Compiles `m` component expressions into a jump amplitude `(t, x, e) -> ℝ^m`.
pub fn compile_jump_field(exprs: &[Expr], scope: &Scope) -> Result<JumpField, DslError> {
    let comps = compile_all(exprs, scope)?;
    Ok(Arc::new(move |t, x: &Vector, e: &Vector| {
        Vector::from_iterator(
            comps.len(),
            comps
                .iter()
                .map(|c| c.eval(t, x.as_slice(), e.as_slice()).unwrap_or(f64::NAN)),
        )
    }))
}
