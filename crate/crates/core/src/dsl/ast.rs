use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Variable reference. State and mark indices are 1-based as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Var {
    Time,
    State(usize),
    Mark(usize),
    Param(String),
}

impl Var {
    pub(crate) fn from_ident(name: &str) -> Self {
        if name == "t" {
            return Var::Time;
        }
        let indexed = |prefix: char| -> Option<usize> {
            let rest = name.strip_prefix(prefix)?;
            if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            rest.parse().ok()
        };
        if let Some(i) = indexed('x') {
            Var::State(i)
        } else if let Some(i) = indexed('e') {
            Var::Mark(i)
        } else {
            Var::Param(name.to_string())
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Time => f.write_str("t"),
            Var::State(i) => write!(f, "x{i}"),
            Var::Mark(i) => write!(f, "e{i}"),
            Var::Param(p) => f.write_str(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

const NEG_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => ATOM_PRECEDENCE,
            Expr::Neg(_) => NEG_PRECEDENCE,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }

    /// Every variable referenced, in traversal order.
    pub fn variables(&self) -> Vec<&Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => out.push(v),
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Renders with every compound subexpression parenthesised.
    pub fn to_fully_parenthesized(&self) -> String {
        match self {
            Expr::Num(v) => format!("{v}"),
            Expr::Var(v) => v.to_string(),
            Expr::Neg(e) => format!("(-{})", e.to_fully_parenthesized()),
            Expr::Binary(op, a, b) => format!(
                "({} {} {})",
                a.to_fully_parenthesized(),
                op.symbol(),
                b.to_fully_parenthesized()
            ),
            Expr::Call(func, e) => format!("{}({})", func.name(), e.to_fully_parenthesized()),
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Minimal-parenthesis rendering that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, e.precedence() < NEG_PRECEDENCE)
            }
            Expr::Binary(BinOp::Pow, a, b) => {
                write_child(f, a, a.precedence() <= BinOp::Pow.precedence())?;
                f.write_str("^")?;
                write_child(f, b, b.precedence() < NEG_PRECEDENCE)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                write_child(f, a, a.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, b, b.precedence() <= p)
            }
        }
    }
}
