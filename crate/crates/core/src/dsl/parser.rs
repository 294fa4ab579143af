//! Pratt parser over the token stream.

use super::ast::{BinOp, Expr, Func, Var};
use super::lexer::{tokenize, Token, TokenKind};
use super::DslError;

/// Binding power of prefix minus: tighter than `*` and `/`, looser than `^`.
const NEG_BP: u8 = 5;

fn infix_binding_power(kind: &TokenKind) -> Option<(BinOp, u8, u8)> {
    Some(match kind {
        TokenKind::Plus => (BinOp::Add, 1, 2),
        TokenKind::Minus => (BinOp::Sub, 1, 2),
        TokenKind::Star => (BinOp::Mul, 3, 4),
        TokenKind::Slash => (BinOp::Div, 3, 4),
        // right-associative
        TokenKind::Caret => (BinOp::Pow, 7, 6),
        _ => return None,
    })
}

struct Parser {
    tokens: Vec<Token>,
    cursor: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.cursor]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.cursor].clone();
        if tok.kind != TokenKind::Eof {
            self.cursor += 1;
        }
        tok
    }

    fn expect(&mut self, kind: TokenKind, expected: &'static str) -> Result<Token, DslError> {
        let tok = self.advance();
        if tok.kind == kind {
            Ok(tok)
        } else {
            Err(DslError::Parse {
                found: tok.kind.describe(),
                expected,
                offset: tok.offset,
            })
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, DslError> {
        let tok = self.advance();
        let mut lhs = match tok.kind {
            TokenKind::Number(v) => Expr::Num(v),
            TokenKind::Ident(name) => self.ident(name, tok.offset)?,
            TokenKind::LParen => {
                let inner = self.expr(0)?;
                self.expect(TokenKind::RParen, "`)`")?;
                inner
            }
            TokenKind::Minus => Expr::Neg(Box::new(self.expr(NEG_BP)?)),
            other => {
                return Err(DslError::Parse {
                    found: other.describe(),
                    expected: "an operand",
                    offset: tok.offset,
                })
            }
        };

        while let Some((op, lbp, rbp)) = infix_binding_power(&self.peek().kind) {
            if lbp < min_bp {
                break;
            }
            self.advance();
            let rhs = self.expr(rbp)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn ident(&mut self, name: String, offset: usize) -> Result<Expr, DslError> {
        if self.peek().kind != TokenKind::LParen {
            if Func::from_name(&name).is_some() {
                let tok = self.peek().clone();
                return Err(DslError::Parse {
                    found: tok.kind.describe(),
                    expected: "`(` after function name",
                    offset: tok.offset,
                });
            }
            return Ok(Expr::Var(Var::from_ident(&name)));
        }
        let Some(func) = Func::from_name(&name) else {
            return Err(DslError::UnknownFunction { name, offset });
        };
        self.advance();
        if self.peek().kind == TokenKind::RParen {
            return Err(DslError::Arity { name, offset });
        }
        let arg = self.expr(0)?;
        match self.peek().kind {
            TokenKind::RParen => {
                self.advance();
            }
            TokenKind::Comma => return Err(DslError::Arity { name, offset }),
            _ => {
                let tok = self.peek().clone();
                return Err(DslError::Parse {
                    found: tok.kind.describe(),
                    expected: "`)`",
                    offset: tok.offset,
                });
            }
        }
        Ok(Expr::Call(func, Box::new(arg)))
    }
}

/// Parses a complete expression.
pub fn parse(src: &str) -> Result<Expr, DslError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, cursor: 0 };
    let expr = parser.expr(0)?;
    let tail = parser.peek().clone();
    if tail.kind != TokenKind::Eof {
        return Err(DslError::Parse {
            found: tail.kind.describe(),
            expected: "an operator or end of input",
            offset: tail.offset,
        });
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(src: &str) -> String {
        parse(src).unwrap().to_fully_parenthesized()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(fp("1 + 2 * 3"), "(1 + (2 * 3))");
        assert_eq!(fp("1 - 2 - 3"), "((1 - 2) - 3)");
        assert_eq!(fp("8 / 4 / 2"), "((8 / 4) / 2)");
        assert_eq!(fp("x2^2^2"), "(x2 ^ (2 ^ 2))");
        assert_eq!(fp("-x1^2"), "(-(x1 ^ 2))");
        assert_eq!(fp("-2*x1"), "((-2) * x1)");
        assert_eq!(fp("2^-1*3"), "((2 ^ (-1)) * 3)");
        assert_eq!(fp("2^-1^2"), "(2 ^ (-(1 ^ 2)))");
    }

    #[test]
    fn negated_state_component() {
        assert_eq!(
            parse("-x3").unwrap(),
            Expr::Neg(Box::new(Expr::Var(Var::State(3))))
        );
    }

    #[test]
    fn errors_carry_offsets() {
        assert!(matches!(
            parse("1 + * 2"),
            Err(DslError::Parse { offset: 4, .. })
        ));
        assert!(matches!(
            parse("(1 + 2"),
            Err(DslError::Parse { offset: 6, .. })
        ));
        assert!(matches!(
            parse("1 2"),
            Err(DslError::Parse { offset: 2, .. })
        ));
        assert_eq!(
            parse("foo(1)"),
            Err(DslError::UnknownFunction {
                name: "foo".into(),
                offset: 0
            })
        );
        assert!(matches!(parse("sin(1, 2)"), Err(DslError::Arity { .. })));
        assert!(matches!(parse("cos()"), Err(DslError::Arity { .. })));
        assert!(matches!(parse("sin + 1"), Err(DslError::Parse { .. })));
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "-(x1 + 2)^2",
            "(-x1)^2",
            "2^(3^x2)",
            "(2^3)^x2",
            "a - (b - c)",
            "-(-x1)",
            "1/(2*x3)",
        ] {
            let e = parse(src).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{src} -> {e}");
        }
    }
}
