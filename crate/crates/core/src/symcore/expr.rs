use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::poly::{Atom, Func, Monomial, Poly, RatFunc};
use super::SymError;

/// Tree node of an expression.
#[derive(Clone, Debug)]
pub enum Node {
    Const(BigRational),
    Var(Arc<str>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Expr, BigRational),
    Quotient(Expr, Expr),
    Func(Func, Expr),
}

struct Inner {
    node: OnceLock<Node>,
    normal: OnceLock<Result<Arc<RatFunc>, SymError>>,
}

/// Immutable symbolic expression.
///
/// Equality and hashing go through the rational normal form, so two
/// expressions compare equal when they agree as rational functions of their
/// atoms. Arithmetic operators return normalized results.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl Expr {
    fn from_node(node: Node) -> Expr {
        let cell = OnceLock::new();
        let _ = cell.set(node);
        Expr(Arc::new(Inner {
            node: cell,
            normal: OnceLock::new(),
        }))
    }

    pub(crate) fn from_ratfunc(r: RatFunc) -> Expr {
        let cell = OnceLock::new();
        let _ = cell.set(Ok(Arc::new(r)));
        Expr(Arc::new(Inner {
            node: OnceLock::new(),
            normal: cell,
        }))
    }

    pub fn constant(c: BigRational) -> Expr {
        Expr::from_ratfunc(RatFunc::constant(c))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::constant(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: &str) -> Expr {
        assert!(!name.is_empty(), "variable names are nonempty");
        Expr::from_ratfunc(RatFunc::var(Arc::from(name)))
    }

    /// Unevaluated sum node.
    pub fn sum_node(terms: Vec<Expr>) -> Expr {
        Expr::from_node(Node::Sum(terms))
    }

    /// Unevaluated product node.
    pub fn product_node(factors: Vec<Expr>) -> Expr {
        Expr::from_node(Node::Product(factors))
    }

    pub fn power_node(base: Expr, exp: BigRational) -> Expr {
        Expr::from_node(Node::Power(base, exp))
    }

    pub fn quotient_node(num: Expr, den: Expr) -> Expr {
        Expr::from_node(Node::Quotient(num, den))
    }

    pub fn func_node(f: Func, arg: Expr) -> Expr {
        Expr::from_node(Node::Func(f, arg))
    }

    pub fn const_node(c: BigRational) -> Expr {
        Expr::from_node(Node::Const(c))
    }

    pub fn var_node(name: &str) -> Expr {
        Expr::from_node(Node::Var(Arc::from(name)))
    }

    pub fn node(&self) -> &Node {
        self.0.node.get_or_init(|| {
            let r = self
                .0
                .normal
                .get()
                .and_then(|r| r.as_ref().ok())
                .expect("expression has either a node or a normal form");
            ratfunc_node(r)
        })
    }

    pub(crate) fn try_ratfunc(&self) -> Result<&RatFunc, SymError> {
        self.0
            .normal
            .get_or_init(|| node_ratfunc(self.node()).map(Arc::new))
            .as_ref()
            .map(|a| &**a)
            .map_err(Clone::clone)
    }

    pub(crate) fn ratfunc(&self) -> &RatFunc {
        match self.try_ratfunc() {
            Ok(r) => r,
            Err(e) => panic!("expression has no normal form: {e}"),
        }
    }

    /// Checks that the expression has a well-defined normal form.
    pub fn validate(&self) -> Result<(), SymError> {
        self.try_ratfunc().map(|_| ())
    }

    pub fn try_normalize(&self) -> Result<Expr, SymError> {
        Ok(Expr::from_ratfunc(self.try_ratfunc()?.clone()))
    }

    pub fn normalize(&self) -> Expr {
        Expr::from_ratfunc(self.ratfunc().clone())
    }

    pub fn is_exact_zero(&self) -> bool {
        self.ratfunc().is_zero()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        self.ratfunc().as_constant()
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.as_rational().and_then(|c| c.to_f64())
    }

    pub fn is_constant(&self) -> bool {
        self.as_rational().is_some()
    }

    pub fn is_polynomial(&self) -> bool {
        self.ratfunc().is_polynomial()
    }

    /// True when only plain variables occur (no function applications or roots).
    pub fn is_rational_fragment(&self) -> bool {
        self.ratfunc().is_rational_fragment()
    }

    pub fn contains_var(&self, var: &str) -> bool {
        self.ratfunc().contains_var(var)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match self.try_ratfunc() {
            Ok(r) => r.collect_vars(&mut out),
            Err(_) => collect_node_vars(self.node(), &mut out),
        }
        out.into_iter().map(|s| s.to_string()).collect()
    }

    pub fn diff(&self, var: &str) -> Expr {
        Expr::from_ratfunc(self.ratfunc().derivative(var))
    }

    pub fn subs(&self, bindings: &HashMap<String, Expr>) -> Result<Expr, SymError> {
        if bindings.is_empty() {
            return self.try_normalize();
        }
        let mut map = HashMap::with_capacity(bindings.len());
        for (k, v) in bindings {
            map.insert(k.as_str(), v.try_ratfunc()?.clone());
        }
        Ok(Expr::from_ratfunc(self.try_ratfunc()?.substitute(&map)?))
    }

    /// Substitution from a slice of pairs.
    pub fn subs_pairs(&self, pairs: &[(&str, Expr)]) -> Result<Expr, SymError> {
        let mut map = HashMap::with_capacity(pairs.len());
        for (k, v) in pairs {
            map.insert(*k, v.try_ratfunc()?.clone());
        }
        Ok(Expr::from_ratfunc(self.try_ratfunc()?.substitute(&map)?))
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Expr, SymError> {
        Ok(Expr::from_ratfunc(
            self.try_ratfunc()?.checked_div(other.try_ratfunc()?)?,
        ))
    }

    pub fn powi(&self, e: i64) -> Result<Expr, SymError> {
        Ok(Expr::from_ratfunc(self.try_ratfunc()?.powi(e)?))
    }

    pub fn pow_rational(&self, q: &BigRational) -> Result<Expr, SymError> {
        Ok(Expr::from_ratfunc(RatFunc::pow_rational(self.try_ratfunc()?, q)?))
    }

    pub fn apply(f: Func, arg: &Expr) -> Result<Expr, SymError> {
        let a = arg.try_ratfunc()?;
        if f == Func::Log && a.is_zero() {
            return Err(SymError::Undefined("log(0)".into()));
        }
        Ok(Expr::from_ratfunc(RatFunc::func(f, a.clone())))
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self).expect("sin is total")
    }

    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self).expect("cos is total")
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self).expect("exp is total")
    }

    /// Numerator and denominator of the normal form.
    pub fn numer_denom(&self) -> (Expr, Expr) {
        let r = self.ratfunc();
        (
            Expr::from_ratfunc(RatFunc::from_poly(r.num.clone())),
            Expr::from_ratfunc(RatFunc::from_poly(r.den.clone())),
        )
    }

    /// Numerator made primitive with positive leading coefficient; it has the
    /// same zero set as `self` wherever the denominator is nonzero.
    pub fn primitive_numerator(&self) -> Expr {
        let r = self.ratfunc();
        if let Some(c) = r.num.as_constant() {
            return Expr::constant(c);
        }
        let (_, p) = r.num.primitive();
        Expr::from_ratfunc(RatFunc::from_poly(p))
    }

    /// Coefficient list in powers of `var` when the normal form is a polynomial
    /// in that variable (other atoms may occur in coefficients).
    pub fn poly_coefficients(&self, var: &str) -> Option<Vec<Expr>> {
        let r = self.ratfunc();
        if r.den.contains_var(var) {
            return None;
        }
        let atom = Atom::Var(Arc::from(var));
        let inv = r.den.as_constant();
        let coeffs = r.num.coefficients_in(&atom);
        let den = RatFunc::from_poly(r.den.clone());
        let mut out = Vec::with_capacity(coeffs.len());
        for c in coeffs {
            if c.contains_var(var) {
                return None;
            }
            let rc = match &inv {
                Some(k) => RatFunc::from_poly(c.scale(&k.recip())),
                None => RatFunc::from_poly(c).checked_div(&den).ok()?,
            };
            out.push(Expr::from_ratfunc(rc));
        }
        Some(out)
    }

    /// Additive terms of the expanded numerator divided by the denominator.
    pub fn terms(&self) -> Vec<Expr> {
        let r = self.ratfunc();
        let den = RatFunc::from_poly(r.den.clone());
        r.num
            .sorted_terms()
            .into_iter()
            .map(|(m, c)| {
                let t = RatFunc::from_poly(Poly::from_term(m.clone(), c.clone()));
                Expr::from_ratfunc(t.checked_div(&den).expect("nonzero denominator"))
            })
            .collect()
    }

    /// Rough degree bound of the fully expanded form.
    pub fn expansion_degree(&self) -> u64 {
        if let Some(Ok(r)) = self.0.normal.get() {
            return r.num.total_degree().max(r.den.total_degree());
        }
        match self.node() {
            Node::Const(_) => 0,
            Node::Var(_) | Node::Func(..) => 1,
            Node::Sum(ts) => ts.iter().map(Expr::expansion_degree).max().unwrap_or(0),
            Node::Product(fs) => fs.iter().map(Expr::expansion_degree).sum(),
            Node::Power(b, q) => {
                if q.is_integer() {
                    b.expansion_degree()
                        .saturating_mul(q.to_integer().abs().to_u64().unwrap_or(u64::MAX))
                } else {
                    1
                }
            }
            Node::Quotient(a, b) => a.expansion_degree().saturating_add(b.expansion_degree()),
        }
    }

    /// Evaluates the tree in double precision.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        let v = eval_node(self.node(), env)?;
        v.is_finite().then_some(v)
    }

    pub fn eval_map(&self, env: &HashMap<String, f64>) -> Option<f64> {
        self.eval(&|name| env.get(name).copied())
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut acc = RatFunc::zero();
        for e in items {
            acc = acc.add(e.ratfunc());
        }
        Expr::from_ratfunc(acc)
    }
}

fn collect_node_vars(node: &Node, out: &mut BTreeSet<Arc<str>>) {
    match node {
        Node::Const(_) => {}
        Node::Var(v) => {
            out.insert(v.clone());
        }
        Node::Sum(xs) | Node::Product(xs) => {
            for x in xs {
                collect_node_vars(x.node(), out);
            }
        }
        Node::Power(b, _) | Node::Func(_, b) => collect_node_vars(b.node(), out),
        Node::Quotient(a, b) => {
            collect_node_vars(a.node(), out);
            collect_node_vars(b.node(), out);
        }
    }
}

fn eval_node(node: &Node, env: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
    Some(match node {
        Node::Const(c) => c.to_f64()?,
        Node::Var(v) => env(v)?,
        Node::Sum(xs) => {
            let mut s = 0.0;
            for x in xs {
                s += eval_node(x.node(), env)?;
            }
            s
        }
        Node::Product(xs) => {
            let mut s = 1.0;
            for x in xs {
                s *= eval_node(x.node(), env)?;
            }
            s
        }
        Node::Power(b, q) => {
            let base = eval_node(b.node(), env)?;
            if q.is_integer() {
                base.powi(q.to_integer().to_i32()?)
            } else {
                base.powf(q.to_f64()?)
            }
        }
        Node::Quotient(a, b) => eval_node(a.node(), env)? / eval_node(b.node(), env)?,
        Node::Func(f, a) => f.apply(eval_node(a.node(), env)?),
    })
}

fn node_ratfunc(node: &Node) -> Result<RatFunc, SymError> {
    match node {
        Node::Const(c) => Ok(RatFunc::constant(c.clone())),
        Node::Var(v) => Ok(RatFunc::var(v.clone())),
        Node::Sum(xs) => {
            let mut acc = RatFunc::zero();
            for x in xs {
                acc = acc.add(x.try_ratfunc()?);
            }
            Ok(acc)
        }
        Node::Product(xs) => {
            let mut acc = RatFunc::one();
            for x in xs {
                acc = acc.mul(x.try_ratfunc()?);
            }
            Ok(acc)
        }
        Node::Power(b, q) => RatFunc::pow_rational(b.try_ratfunc()?, q),
        Node::Quotient(a, b) => a.try_ratfunc()?.checked_div(b.try_ratfunc()?),
        Node::Func(f, a) => {
            let arg = a.try_ratfunc()?;
            if *f == Func::Log && arg.is_zero() {
                return Err(SymError::Undefined("log(0)".into()));
            }
            Ok(RatFunc::func(*f, arg.clone()))
        }
    }
}

fn atom_expr(atom: &Atom) -> Expr {
    match atom {
        Atom::Var(v) => Expr::from_node(Node::Var(v.clone())),
        Atom::Func(f, arg) => Expr::from_node(Node::Func(*f, Expr::from_ratfunc((**arg).clone()))),
        Atom::Pow(base, q) => {
            let b = Expr::from_ratfunc((**base).clone());
            if *q == BigRational::new(1.into(), 2.into()) {
                Expr::from_node(Node::Func(Func::Sqrt, b))
            } else {
                Expr::from_node(Node::Power(b, q.clone()))
            }
        }
    }
}

fn monomial_expr(m: &Monomial, c: &BigRational) -> Expr {
    let mut factors = Vec::with_capacity(m.0.len() + 1);
    if !c.is_one() || m.is_one() {
        factors.push(Expr::from_node(Node::Const(c.clone())));
    }
    for (atom, e) in &m.0 {
        let a = atom_expr(atom);
        if *e == 1 {
            factors.push(a);
        } else {
            factors.push(Expr::from_node(Node::Power(
                a,
                BigRational::from_integer(BigInt::from(*e)),
            )));
        }
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::from_node(Node::Product(factors))
    }
}

fn poly_expr(p: &Poly) -> Expr {
    let mut terms: Vec<Expr> = p.sorted_terms().into_iter().map(|(m, c)| monomial_expr(m, c)).collect();
    match terms.len() {
        0 => Expr::from_node(Node::Const(BigRational::zero())),
        1 => terms.pop().unwrap(),
        _ => Expr::from_node(Node::Sum(terms)),
    }
}

fn ratfunc_node(r: &RatFunc) -> Node {
    if let Some(k) = r.den.as_constant() {
        debug_assert!(k.is_one());
        return poly_expr(&r.num).node().clone();
    }
    Node::Quotient(poly_expr(&r.num), poly_expr(&r.den))
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.ratfunc() == other.ratfunc()
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.ratfunc().hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_POWER: u8 = 3;
const PREC_ATOM: u8 = 4;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Sum(ts) if ts.len() > 1 => PREC_SUM,
        Node::Sum(_) => PREC_ATOM,
        Node::Product(_) | Node::Quotient(..) => PREC_PRODUCT,
        Node::Const(c) if c.is_negative() || !c.is_integer() => PREC_PRODUCT,
        Node::Power(..) => PREC_POWER,
        _ => PREC_ATOM,
    }
}

/// Leading sign of a term for sum display, and the term's magnitude.
fn is_negative_term(e: &Expr) -> bool {
    match e.node() {
        Node::Const(c) => c.is_negative(),
        Node::Product(fs) => fs.first().map(is_negative_term).unwrap_or(false),
        Node::Quotient(a, _) => is_negative_term(a),
        _ => false,
    }
}

fn write_abs(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write!(f, "{}", c.abs()),
        Node::Product(fs) => {
            let mut rest: &[Expr] = fs;
            let mut first = true;
            if let Some(Node::Const(c)) = fs.first().map(Expr::node) {
                rest = &fs[1..];
                if !c.abs().is_one() || rest.is_empty() {
                    write!(f, "{}", c.abs())?;
                    first = false;
                }
            } else if let Some(head) = fs.first() {
                write_abs(head, f)?;
                rest = &fs[1..];
                first = false;
            }
            for x in rest {
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write_factor(x, f)?;
            }
            Ok(())
        }
        Node::Quotient(a, b) => {
            if precedence(a) <= PREC_SUM {
                write!(f, "(")?;
                write_abs(a, f)?;
                write!(f, ")")?;
            } else {
                write_abs(a, f)?;
            }
            write!(f, "/")?;
            write_denominator(b, f)
        }
        _ => write!(f, "{e}"),
    }
}

fn write_factor(x: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let needs = match x.node() {
        Node::Quotient(..) => true,
        _ => precedence(x) < PREC_POWER,
    };
    if needs {
        write!(f, "({x})")
    } else {
        write!(f, "{x}")
    }
}

fn write_denominator(x: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(x) < PREC_POWER {
        write!(f, "({x})")
    } else {
        write!(f, "{x}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(v) => write!(f, "{v}"),
            Node::Sum(ts) => {
                if ts.is_empty() {
                    return write!(f, "0");
                }
                for (i, t) in ts.iter().enumerate() {
                    let neg = is_negative_term(t);
                    match (i, neg) {
                        (0, true) => write!(f, "-")?,
                        (0, false) => {}
                        (_, true) => write!(f, " - ")?,
                        (_, false) => write!(f, " + ")?,
                    }
                    if neg {
                        write_abs(t, f)?;
                    } else if precedence(t) <= PREC_SUM {
                        write!(f, "({t})")?;
                    } else {
                        write!(f, "{t}")?;
                    }
                }
                Ok(())
            }
            Node::Product(fs) => {
                if fs.is_empty() {
                    return write!(f, "1");
                }
                if is_negative_term(self) {
                    write!(f, "-")?;
                    return write_abs(self, f);
                }
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write_factor(x, f)?;
                }
                Ok(())
            }
            Node::Power(b, q) => {
                if precedence(b) < PREC_ATOM {
                    write!(f, "({b})")?;
                } else {
                    write!(f, "{b}")?;
                }
                if q.is_integer() && !q.is_negative() {
                    write!(f, "^{q}")
                } else {
                    write!(f, "^({q})")
                }
            }
            Node::Quotient(a, b) => {
                if is_negative_term(a) {
                    write!(f, "-")?;
                    return write_abs(self, f);
                }
                if precedence(a) <= PREC_SUM {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, "/")?;
                write_denominator(b, f)
            }
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        super::parse::parse_any(&s).map_err(serde::de::Error::custom)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:ident) => {
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::from_ratfunc(self.ratfunc().$op(rhs.ratfunc()))
            }
        }
        impl $trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                (&self).$method(rhs)
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_ratfunc(self.ratfunc().neg())
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<BigRational> for Expr {
    fn from(c: BigRational) -> Self {
        Expr::constant(c)
    }
}
