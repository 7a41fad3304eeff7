use num_traits::ToPrimitive;

use super::expr::{Expr, Node};
use super::poly::Func;

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Load(usize),
    Add(usize),
    Mul(usize),
    Div,
    Powi(i32),
    Powf(f64),
    Func(Func),
}

/// Expression compiled to a stack program over a fixed variable ordering.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    depth: usize,
}

/// Compilation failure: the expression mentions a variable outside `vars`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("variable `{0}` is not bound in the evaluation context")]
pub struct UnboundVariable(pub String);

impl CompiledExpr {
    pub fn compile<S: AsRef<str>>(e: &Expr, vars: &[S]) -> Result<CompiledExpr, UnboundVariable> {
        let mut ops = Vec::new();
        emit(e, vars, &mut ops)?;
        let mut depth: usize = 0;
        let mut max = 0;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Load(_) => depth += 1,
                Op::Add(n) | Op::Mul(n) => depth -= n - 1,
                Op::Div => depth -= 1,
                _ => {}
            }
            max = max.max(depth);
        }
        Ok(CompiledExpr { ops, depth: max })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match op {
                Op::Const(c) => stack.push(*c),
                Op::Load(i) => stack.push(x[*i]),
                Op::Add(n) => {
                    let k = stack.len() - n;
                    let s: f64 = stack[k..].iter().sum();
                    stack.truncate(k);
                    stack.push(s);
                }
                Op::Mul(n) => {
                    let k = stack.len() - n;
                    let s: f64 = stack[k..].iter().product();
                    stack.truncate(k);
                    stack.push(s);
                }
                Op::Div => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(a / b);
                }
                Op::Powi(n) => {
                    let a = stack.pop().unwrap();
                    stack.push(a.powi(*n));
                }
                Op::Powf(q) => {
                    let a = stack.pop().unwrap();
                    stack.push(a.powf(*q));
                }
                Op::Func(f) => {
                    let a = stack.pop().unwrap();
                    stack.push(f.apply(a));
                }
            }
        }
        stack.pop().unwrap_or(0.0)
    }
}

fn emit<S: AsRef<str>>(e: &Expr, vars: &[S], ops: &mut Vec<Op>) -> Result<(), UnboundVariable> {
    match e.node() {
        Node::Const(c) => ops.push(Op::Const(c.to_f64().unwrap_or(f64::NAN))),
        Node::Var(v) => {
            let i = vars
                .iter()
                .position(|s| s.as_ref() == &**v)
                .ok_or_else(|| UnboundVariable(v.to_string()))?;
            ops.push(Op::Load(i));
        }
        Node::Sum(xs) | Node::Product(xs) => {
            if xs.is_empty() {
                let unit = matches!(e.node(), Node::Product(_)) as u8 as f64;
                ops.push(Op::Const(unit));
                return Ok(());
            }
            for x in xs {
                emit(x, vars, ops)?;
            }
            if xs.len() > 1 {
                ops.push(if matches!(e.node(), Node::Sum(_)) {
                    Op::Add(xs.len())
                } else {
                    Op::Mul(xs.len())
                });
            }
        }
        Node::Power(b, q) => {
            emit(b, vars, ops)?;
            if q.is_integer() {
                ops.push(Op::Powi(q.to_integer().to_i32().unwrap_or(i32::MAX)));
            } else {
                ops.push(Op::Powf(q.to_f64().unwrap_or(f64::NAN)));
            }
        }
        Node::Quotient(a, b) => {
            emit(a, vars, ops)?;
            emit(b, vars, ops)?;
            ops.push(Op::Div);
        }
        Node::Func(f, a) => {
            emit(a, vars, ops)?;
            ops.push(Op::Func(*f));
        }
    }
    Ok(())
}
