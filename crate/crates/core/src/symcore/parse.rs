use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::poly::Func;
use super::{Expr, SymError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, SymError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                return Err(SymError::Syntax {
                    offset: i,
                    message: "decimal literals are not allowed; use a/b".into(),
                });
            }
            let n: BigInt = text[start..i].parse().expect("digits");
            out.push((Tok::Int(n), start));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Name(text[start..i].to_string()), start));
        } else if b"+-*/^()".contains(&c) {
            out.push((Tok::Op(c as char), i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap();
            return Err(SymError::Syntax {
                offset: i,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    allowed: &'a dyn Fn(&str) -> bool,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, SymError> {
        Err(SymError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), SymError> {
        if self.eat(op) {
            Ok(())
        } else {
            self.err(format!("expected `{op}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr, SymError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                let t = self.term()?;
                terms.push(negate(t));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::sum_node(terms)
        })
    }

    fn term(&mut self) -> Result<Expr, SymError> {
        let mut acc = self.factor(false)?;
        let mut factors = Vec::new();
        loop {
            if self.eat('*') {
                factors.push(std::mem::replace(&mut acc, self.factor(false)?));
            } else if self.eat('/') {
                let den = self.factor(true)?;
                factors.push(acc);
                let num = if factors.len() == 1 {
                    factors.pop().unwrap()
                } else {
                    Expr::product_node(std::mem::take(&mut factors))
                };
                acc = Expr::quotient_node(num, den);
            } else {
                break;
            }
        }
        if factors.is_empty() {
            Ok(acc)
        } else {
            factors.push(acc);
            Ok(Expr::product_node(factors))
        }
    }

    fn factor(&mut self, after_slash: bool) -> Result<Expr, SymError> {
        if self.eat('-') {
            let inner = self.factor(after_slash)?;
            return Ok(negate(inner));
        }
        let base = self.base(after_slash)?;
        if self.eat('^') {
            let q = self.exponent()?;
            return Ok(Expr::power_node(base, q));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<BigRational, SymError> {
        let neg = self.eat('-');
        let q = match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                BigRational::from_integer(n)
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let start = self.offset();
                let e = self.expr()?;
                self.expect(')')?;
                match e.try_ratfunc()?.as_constant() {
                    Some(c) => c,
                    None => {
                        let _ = start;
                        return Err(SymError::NonConstantExponent);
                    }
                }
            }
            _ => return self.err("expected exponent"),
        };
        Ok(if neg { -q } else { q })
    }

    fn base(&mut self, after_slash: bool) -> Result<Expr, SymError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                if !after_slash {
                    if let (Some(Tok::Op('/')), Some(Tok::Int(d))) = (
                        self.toks.get(self.pos).map(|t| &t.0),
                        self.toks.get(self.pos + 1).map(|t| t.0.clone()),
                    ) {
                        if d.is_zero() {
                            return Err(SymError::DivisionByZero);
                        }
                        self.pos += 2;
                        return Ok(Expr::const_node(BigRational::new(n, d)));
                    }
                }
                Ok(Expr::const_node(BigRational::from_integer(n)))
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if let Some(func) = Func::from_name(&name) {
                    if self.eat('(') {
                        let arg = self.expr()?;
                        self.expect(')')?;
                        return Ok(Expr::func_node(func, arg));
                    }
                }
                if !(self.allowed)(&name) {
                    return Err(SymError::UnknownVariable { name, offset });
                }
                Ok(Expr::var_node(&name))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(_) => self.err("expected a number, name or `(`"),
            None => self.err("unexpected end of input"),
        }
    }
}

fn negate(e: Expr) -> Expr {
    if let super::Node::Const(c) = e.node() {
        return Expr::const_node(-c.clone());
    }
    Expr::product_node(vec![Expr::const_node(-BigRational::one()), e])
}

/// Parses `text`, accepting only variables for which `allowed` holds.
pub fn parse_with(text: &str, allowed: &dyn Fn(&str) -> bool) -> Result<Expr, SymError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        allowed,
    };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    e.validate()?;
    Ok(e)
}

/// Parses `text` over the declared variable names.
pub fn parse<S: AsRef<str>>(text: &str, allowed_vars: &[S]) -> Result<Expr, SymError> {
    parse_with(text, &|name| allowed_vars.iter().any(|v| v.as_ref() == name))
}

pub(crate) fn parse_any(text: &str) -> Result<Expr, SymError> {
    parse_with(text, &|_| true)
}
