//! Random expression trees with two independent renderings.

#![allow(dead_code)]

use rand::Rng;

#[derive(Debug, Clone)]
pub enum Tree {
    Num(f64),
    Var(&'static str),
    Neg(Box<Tree>),
    Bin(char, Box<Tree>, Box<Tree>),
    Call(&'static str, Box<Tree>),
}

pub const VARS: [&str; 6] = ["x1", "x2", "x3", "t", "e1", "lambda"];
const FUNCS: [&str; 5] = ["sin", "cos", "exp", "sqrt", "abs"];
const OPS: [char; 5] = ['+', '-', '*', '/', '^'];

pub fn random_tree<R: Rng>(rng: &mut R, depth: usize) -> Tree {
    if depth == 0 || rng.random_bool(0.2) {
        return match rng.random_range(0..3) {
            0 => Tree::Num(f64::from(rng.random_range(0..40u32)) / 8.0),
            1 => Tree::Var("pi"),
            _ => Tree::Var(VARS[rng.random_range(0..VARS.len())]),
        };
    }
    match rng.random_range(0..10) {
        0 | 1 => Tree::Neg(Box::new(random_tree(rng, depth - 1))),
        2 | 3 => Tree::Call(
            FUNCS[rng.random_range(0..FUNCS.len())],
            Box::new(random_tree(rng, depth - 1)),
        ),
        _ => Tree::Bin(
            OPS[rng.random_range(0..OPS.len())],
            Box::new(random_tree(rng, depth - 1)),
            Box::new(random_tree(rng, depth - 1)),
        ),
    }
}

impl Tree {
    pub fn depth(&self) -> usize {
        match self {
            Tree::Num(_) | Tree::Var(_) => 0,
            Tree::Neg(a) | Tree::Call(_, a) => 1 + a.depth(),
            Tree::Bin(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn full(&self) -> String {
        match self {
            Tree::Num(v) => format!("{v}"),
            Tree::Var(n) => n.to_string(),
            Tree::Neg(a) => format!("(-{})", a.full()),
            Tree::Bin(op, a, b) => format!("({} {op} {})", a.full(), b.full()),
            Tree::Call(f, a) => format!("{f}({})", a.full()),
        }
    }

    /// Binding strength: sums 1, products 2, negation 3, powers 4, atoms 5.
    fn strength(&self) -> u8 {
        match self {
            Tree::Bin('+' | '-', ..) => 1,
            Tree::Bin('*' | '/', ..) => 2,
            Tree::Neg(_) => 3,
            Tree::Bin('^', ..) => 4,
            _ => 5,
        }
    }

    /// Infix rendering with only the parentheses precedence requires and
    /// irregular spacing.
    pub fn minimal<R: Rng>(&self, rng: &mut R) -> String {
        let sp = |rng: &mut R| if rng.random_bool(0.3) { " " } else { "" };
        let wrap = |s: String, yes: bool| if yes { format!("({s})") } else { s };
        match self {
            Tree::Num(v) => format!("{v}"),
            Tree::Var(n) => n.to_string(),
            Tree::Neg(a) => format!("-{}{}", sp(rng), wrap(a.minimal(rng), a.strength() < 3)),
            Tree::Call(f, a) => format!("{f}({})", a.minimal(rng)),
            Tree::Bin(op, a, b) => {
                let s = self.strength();
                let (left_paren, right_paren) = if *op == '^' {
                    (a.strength() <= 4, b.strength() < 3)
                } else {
                    (a.strength() < s, b.strength() <= s)
                };
                let l = wrap(a.minimal(rng), left_paren);
                let (s1, s2) = (sp(rng), sp(rng));
                let r = wrap(b.minimal(rng), right_paren);
                format!("{l}{s1}{op}{s2}{r}")
            }
        }
    }
}
