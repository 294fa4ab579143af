//! Reference evaluator for fully parenthesised expressions.
//!
//! Grammar: `e := number | name | '(' '-' e ')' | '(' e op e ')' | func '(' e ')'`.
//! There is no precedence to get wrong: every compound node carries its own
//! parentheses. Domain failures (division by zero, square root of a negative
//! number, non-finite results) evaluate to `None`.

#![allow(dead_code)]

use std::collections::HashMap;

pub struct Oracle<'a> {
    src: &'a [u8],
    pos: usize,
    env: &'a HashMap<String, f64>,
}

#[derive(Debug, PartialEq)]
pub enum OracleError {
    Syntax(usize),
    Unbound(String),
}

fn checked(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl<'a> Oracle<'a> {
    pub fn eval(src: &'a str, env: &'a HashMap<String, f64>) -> Result<Option<f64>, OracleError> {
        let mut o = Oracle {
            src: src.as_bytes(),
            pos: 0,
            env,
        };
        let v = o.expr()?;
        o.skip_ws();
        if o.pos != o.src.len() {
            return Err(OracleError::Syntax(o.pos));
        }
        Ok(v)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos] == b' ' {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), OracleError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(OracleError::Syntax(self.pos))
        }
    }

    fn expr(&mut self) -> Result<Option<f64>, OracleError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                if self.peek() == Some(b'-') {
                    self.pos += 1;
                    let v = self.expr()?;
                    self.expect(b')')?;
                    return Ok(v.map(|x| -x));
                }
                let a = self.expr()?;
                let op = self.peek().ok_or(OracleError::Syntax(self.pos))?;
                self.pos += 1;
                let b = self.expr()?;
                self.expect(b')')?;
                let (Some(a), Some(b)) = (a, b) else {
                    return Ok(None);
                };
                Ok(match op {
                    b'+' => checked(a + b),
                    b'-' => checked(a - b),
                    b'*' => checked(a * b),
                    b'/' => {
                        if b == 0.0 {
                            None
                        } else {
                            checked(a / b)
                        }
                    }
                    b'^' => checked(a.powf(b)),
                    _ => return Err(OracleError::Syntax(self.pos - 1)),
                })
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                text.parse::<f64>()
                    .map(Some)
                    .map_err(|_| OracleError::Syntax(start))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    let a = self.expr()?;
                    self.expect(b')')?;
                    let Some(a) = a else { return Ok(None) };
                    return Ok(match name {
                        "sin" => checked(a.sin()),
                        "cos" => checked(a.cos()),
                        "exp" => checked(a.exp()),
                        "sqrt" => {
                            if a < 0.0 {
                                None
                            } else {
                                checked(a.sqrt())
                            }
                        }
                        "abs" => checked(a.abs()),
                        _ => return Err(OracleError::Syntax(start)),
                    });
                }
                if name == "pi" {
                    return Ok(Some(std::f64::consts::PI));
                }
                self.env
                    .get(name)
                    .map(|v| Some(*v))
                    .ok_or_else(|| OracleError::Unbound(name.to_string()))
            }
            _ => Err(OracleError::Syntax(self.pos)),
        }
    }
}
