//! Canonical rational-function normal form.
//!
//! A [`RatFunc`] is a quotient of two expanded polynomials over "atoms".
//! Atoms are plain variables, transcendental function applications whose
//! argument is itself in normal form, or powers with a non-integer exponent.
//! Two expressions are equal as rational functions of their atoms exactly when
//! their normal forms have identical numerator after cross multiplication, so
//! zero-testing in the pure-variable fragment is a decision procedure.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::SymError;

/// Unary functions understood by the engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Atom {
    Var(Arc<str>),
    /// Never holds `Func::Sqrt`; square roots are `Pow(_, 1/2)`.
    Func(Func, Arc<RatFunc>),
    /// Non-integer rational exponent.
    Pow(Arc<RatFunc>, BigRational),
}

impl Atom {
    fn contains_var(&self, var: &str) -> bool {
        match self {
            Atom::Var(v) => &**v == var,
            Atom::Func(_, arg) => arg.contains_var(var),
            Atom::Pow(base, _) => base.contains_var(var),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Atom::Var(v) => {
                out.insert(v.clone());
            }
            Atom::Func(_, arg) => arg.collect_vars(out),
            Atom::Pow(base, _) => base.collect_vars(out),
        }
    }

    fn derivative(&self, var: &str) -> RatFunc {
        if !self.contains_var(var) {
            return RatFunc::zero();
        }
        match self {
            Atom::Var(_) => RatFunc::one(),
            Atom::Func(f, arg) => {
                let inner = arg.derivative(var);
                let outer = match f {
                    Func::Sin => RatFunc::func(Func::Cos, (**arg).clone()),
                    Func::Cos => RatFunc::func(Func::Sin, (**arg).clone()).neg(),
                    Func::Exp => RatFunc::func(Func::Exp, (**arg).clone()),
                    Func::Log => RatFunc::one()
                        .checked_div(arg)
                        .expect("log argument in normal form is nonzero"),
                    Func::Sqrt => unreachable!("sqrt is stored as a power atom"),
                };
                outer.mul(&inner)
            }
            Atom::Pow(base, q) => {
                let inner = base.derivative(var);
                let lowered =
                    RatFunc::pow_rational(base, &(q - BigRational::one())).expect("power atom base is nonzero");
                RatFunc::constant(q.clone()).mul(&lowered).mul(&inner)
            }
        }
    }

    fn substitute(&self, map: &HashMap<&str, RatFunc>) -> Result<RatFunc, SymError> {
        Ok(match self {
            Atom::Var(v) => match map.get(&**v) {
                Some(r) => r.clone(),
                None => RatFunc::atom(self.clone()),
            },
            Atom::Func(f, arg) => {
                let a = arg.substitute(map)?;
                if *f == Func::Log && a.is_zero() {
                    return Err(SymError::Undefined("log(0)".into()));
                }
                RatFunc::func(*f, a)
            }
            Atom::Pow(base, q) => RatFunc::pow_rational(&base.substitute(map)?, q)?,
        })
    }

    pub(crate) fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        match self {
            Atom::Var(v) => env(v),
            Atom::Func(f, arg) => Some(f.apply(arg.eval(env)?)),
            Atom::Pow(base, q) => {
                let b = base.eval(env)?;
                Some(b.powf(q.to_f64()?))
            }
        }
    }

    fn is_plain_var(&self) -> bool {
        matches!(self, Atom::Var(_))
    }
}

/// Sorted by atom, exponents strictly positive.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Monomial(pub(crate) Vec<(Atom, u32)>);

impl Monomial {
    pub(crate) fn one() -> Self {
        Monomial(Vec::new())
    }

    pub(crate) fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn degree(&self) -> u64 {
        self.0.iter().map(|(_, e)| *e as u64).sum()
    }

    pub(crate) fn exponent(&self, atom: &Atom) -> u32 {
        self.0.iter().find(|(a, _)| a == atom).map(|(_, e)| *e).unwrap_or(0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// `self / other` when `other` divides `self`.
    fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (atom, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 == *atom {
                let f = other.0[j].1;
                j += 1;
                match e.cmp(&f) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((atom.clone(), e - f)),
                }
            } else if j < other.0.len() && other.0[j].0 < *atom {
                return None;
            } else {
                out.push((atom.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        for (atom, e) in &self.0 {
            let f = other.exponent(atom);
            if f > 0 {
                out.push((atom.clone(), (*e).min(f)));
            }
        }
        Monomial(out)
    }

    fn without(&self, atom: &Atom) -> (u32, Monomial) {
        let mut e = 0;
        let rest = self
            .0
            .iter()
            .filter(|(a, x)| {
                if a == atom {
                    e = *x;
                    false
                } else {
                    true
                }
            })
            .cloned()
            .collect();
        (e, Monomial(rest))
    }
}

/// Lexicographic monomial order with the smallest atom most significant.
pub(crate) fn lex_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.0.get(i), b.0.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some((x, ex)), Some((y, ey))) => match x.cmp(y) {
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => {
                    if ex != ey {
                        return ex.cmp(ey);
                    }
                    i += 1;
                    j += 1;
                }
            },
        }
    }
}

/// Graded lexicographic order, used for display and sign normalization.
pub(crate) fn grlex_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    a.degree().cmp(&b.degree()).then_with(|| lex_cmp(a, b))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Poly {
    pub(crate) terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub(crate) fn zero() -> Self {
        Poly::default()
    }

    pub(crate) fn constant(c: BigRational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub(crate) fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub(crate) fn from_term(m: Monomial, c: BigRational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub(crate) fn atom(a: Atom) -> Self {
        Poly::from_term(Monomial(vec![(a, 1)]), BigRational::one())
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub(crate) fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub(crate) fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub(crate) fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub(crate) fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub(crate) fn mul_term(&self, m: &Monomial, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c * k)).collect(),
        }
    }

    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = Poly::zero();
        for (m, c) in &small.terms {
            for (n, d) in &large.terms {
                out.add_term(m.mul(n), c * d);
            }
        }
        out
    }

    pub(crate) fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub(crate) fn total_degree(&self) -> u64 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Terms sorted by descending graded-lex order.
    pub(crate) fn sorted_terms(&self) -> Vec<(&Monomial, &BigRational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| grlex_cmp(b.0, a.0));
        v
    }

    pub(crate) fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().max_by(|a, b| grlex_cmp(a.0, b.0))
    }

    fn lex_leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().max_by(|a, b| lex_cmp(a.0, b.0))
    }

    fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        let mut g = first.clone();
        for m in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    fn div_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(n, c)| (n.div(m).expect("monomial divides"), c.clone()))
                .collect(),
        }
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub(crate) fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (lm, lc) = d.lex_leading()?;
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut r = self.clone();
        let mut q = Poly::zero();
        while let Some((rm, rc)) = r.lex_leading() {
            let tm = rm.div(&lm)?;
            let tc = rc / &lc;
            r = r.sub(&d.mul_term(&tm, &tc));
            q.add_term(tm, tc);
        }
        Some(q)
    }

    pub(crate) fn contains_var(&self, var: &str) -> bool {
        self.terms.keys().any(|m| m.0.iter().any(|(a, _)| a.contains_var(var)))
    }

    pub(crate) fn atoms(&self) -> BTreeSet<Atom> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(a, _)| a.clone()))
            .collect()
    }

    fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                a.collect_vars(out);
            }
        }
    }

    pub(crate) fn only_plain_vars(&self) -> bool {
        self.terms.keys().all(|m| m.0.iter().all(|(a, _)| a.is_plain_var()))
    }

    pub(crate) fn degree_in(&self, atom: &Atom) -> u32 {
        self.terms.keys().map(|m| m.exponent(atom)).max().unwrap_or(0)
    }

    /// Coefficients of `atom^k` for k = 0..=degree.
    pub(crate) fn coefficients_in(&self, atom: &Atom) -> Vec<Poly> {
        let deg = self.degree_in(atom) as usize;
        let mut out = vec![Poly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let (e, rest) = m.without(atom);
            out[e as usize].add_term(rest, c.clone());
        }
        out
    }

    fn derivative(&self, var: &str) -> RatFunc {
        let mut poly_part = Poly::zero();
        let mut other = RatFunc::zero();
        for (m, c) in &self.terms {
            for (idx, (atom, e)) in m.0.iter().enumerate() {
                if !atom.contains_var(var) {
                    continue;
                }
                let mut lowered = m.0.clone();
                if *e == 1 {
                    lowered.remove(idx);
                } else {
                    lowered[idx].1 = e - 1;
                }
                let coeff = c * BigRational::from_integer(BigInt::from(*e));
                let lowered = Monomial(lowered);
                if atom.is_plain_var() {
                    poly_part.add_term(lowered, coeff);
                } else {
                    let term = RatFunc::from_poly(Poly::from_term(lowered, coeff));
                    other = other.add(&term.mul(&atom.derivative(var)));
                }
            }
        }
        RatFunc::from_poly(poly_part).add(&other)
    }

    fn substitute(&self, map: &HashMap<&str, RatFunc>) -> Result<RatFunc, SymError> {
        let mut cache: HashMap<&Atom, RatFunc> = HashMap::new();
        let mut acc = RatFunc::zero();
        let mut poly_acc = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = RatFunc::constant(c.clone());
            for (atom, e) in &m.0 {
                let val = match cache.get(atom) {
                    Some(v) => v.clone(),
                    None => {
                        let v = atom.substitute(map)?;
                        cache.insert(atom, v.clone());
                        v
                    }
                };
                term = term.mul(&val.powi(*e as i64)?);
            }
            if term.den.as_constant().is_some() {
                poly_acc = poly_acc.add(&term.num);
            } else {
                acc = acc.add(&term);
            }
        }
        Ok(RatFunc::from_poly(poly_acc).add(&acc))
    }

    pub(crate) fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            acc += term_value(m, c, env)?;
        }
        Some(acc)
    }

    /// Values of each term separately (for scale estimates).
    pub(crate) fn eval_terms(&self, env: &dyn Fn(&str) -> Option<f64>) -> Option<Vec<f64>> {
        self.terms.iter().map(|(m, c)| term_value(m, c, env)).collect()
    }

    fn content(&self) -> BigRational {
        // gcd of numerators over lcm of denominators
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            BigRational::one()
        } else {
            BigRational::new(num, den)
        }
    }

    /// Integer, primitive representative with positive leading coefficient.
    pub(crate) fn primitive(&self) -> (BigRational, Poly) {
        if self.is_zero() {
            return (BigRational::one(), Poly::zero());
        }
        let mut k = self.content();
        if self.leading().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            k = -k;
        }
        let p = self.scale(&k.recip());
        (k, p)
    }
}

fn term_value(m: &Monomial, c: &BigRational, env: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
    let mut v = c.to_f64()?;
    for (atom, e) in &m.0 {
        v *= atom.eval(env)?.powi(*e as i32);
    }
    Some(v)
}

/// Quotient of polynomials in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatFunc {
    pub(crate) num: Poly,
    pub(crate) den: Poly,
}

impl RatFunc {
    pub(crate) fn zero() -> Self {
        RatFunc {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub(crate) fn one() -> Self {
        RatFunc::constant(BigRational::one())
    }

    pub(crate) fn constant(c: BigRational) -> Self {
        RatFunc {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub(crate) fn from_poly(p: Poly) -> Self {
        RatFunc {
            num: p,
            den: Poly::one(),
        }
    }

    pub(crate) fn atom(a: Atom) -> Self {
        RatFunc::from_poly(Poly::atom(a))
    }

    pub(crate) fn var(name: Arc<str>) -> Self {
        RatFunc::atom(Atom::Var(name))
    }

    pub(crate) fn new(num: Poly, den: Poly) -> Result<Self, SymError> {
        if den.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        Ok(canonicalize(num, den))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub(crate) fn as_constant(&self) -> Option<BigRational> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(n / d)
    }

    pub(crate) fn is_polynomial(&self) -> bool {
        self.den.as_constant().is_some()
    }

    pub(crate) fn contains_var(&self, var: &str) -> bool {
        self.num.contains_var(var) || self.den.contains_var(var)
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        self.num.collect_vars(out);
        self.den.collect_vars(out);
    }

    /// True when every atom is a plain variable.
    pub(crate) fn is_rational_fragment(&self) -> bool {
        self.num.only_plain_vars() && self.den.only_plain_vars()
    }

    pub(crate) fn add(&self, other: &RatFunc) -> RatFunc {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        if self.den == other.den {
            return canonicalize(self.num.add(&other.num), self.den.clone());
        }
        canonicalize(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub(crate) fn neg(&self) -> RatFunc {
        RatFunc {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub(crate) fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub(crate) fn mul(&self, other: &RatFunc) -> RatFunc {
        if self.is_zero() || other.is_zero() {
            return RatFunc::zero();
        }
        if self.den.as_constant().is_some() && other.den.as_constant().is_some() {
            return canonicalize(self.num.mul(&other.num), self.den.mul(&other.den));
        }
        canonicalize(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub(crate) fn recip(&self) -> Result<RatFunc, SymError> {
        RatFunc::new(self.den.clone(), self.num.clone())
    }

    pub(crate) fn checked_div(&self, other: &RatFunc) -> Result<RatFunc, SymError> {
        if other.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        Ok(canonicalize(self.num.mul(&other.den), self.den.mul(&other.num)))
    }

    pub(crate) fn powi(&self, e: i64) -> Result<RatFunc, SymError> {
        if e == 0 {
            return Ok(RatFunc::one());
        }
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let k = u32::try_from(e.unsigned_abs()).map_err(|_| SymError::ExponentTooLarge)?;
        Ok(canonicalize(base.num.pow(k), base.den.pow(k)))
    }

    pub(crate) fn pow_rational(base: &RatFunc, q: &BigRational) -> Result<RatFunc, SymError> {
        if q.is_integer() {
            let e = q.to_integer().to_i64().ok_or(SymError::ExponentTooLarge)?;
            return base.powi(e);
        }
        if base.is_zero() {
            if q.is_positive() {
                return Ok(RatFunc::zero());
            }
            return Err(SymError::DivisionByZero);
        }
        if let Some(c) = base.as_constant() {
            if let Some(r) = rational_root(&c, q) {
                return Ok(RatFunc::constant(r));
            }
        }
        Ok(RatFunc::atom(Atom::Pow(Arc::new(base.clone()), q.clone())))
    }

    pub(crate) fn func(f: Func, arg: RatFunc) -> RatFunc {
        if f == Func::Sqrt {
            return RatFunc::pow_rational(&arg, &BigRational::new(1.into(), 2.into()))
                .expect("sqrt of nonzero or zero base");
        }
        if let Some(c) = arg.as_constant() {
            match f {
                Func::Sin if c.is_zero() => return RatFunc::zero(),
                Func::Cos | Func::Exp if c.is_zero() => return RatFunc::one(),
                Func::Log if c.is_one() => return RatFunc::zero(),
                _ => {}
            }
        }
        RatFunc::atom(Atom::Func(f, Arc::new(arg)))
    }

    pub(crate) fn derivative(&self, var: &str) -> RatFunc {
        if !self.contains_var(var) {
            return RatFunc::zero();
        }
        let dn = self.num.derivative(var);
        if self.den.as_constant().is_some() {
            let k = self.den.as_constant().unwrap();
            return dn.mul(&RatFunc::constant(k.recip()));
        }
        let dd = self.den.derivative(var);
        let n = RatFunc::from_poly(self.num.clone());
        let d = RatFunc::from_poly(self.den.clone());
        let top = dn.mul(&d).sub(&n.mul(&dd));
        top.checked_div(&d.mul(&d))
            .expect("denominator of a canonical form is nonzero")
    }

    pub(crate) fn substitute(&self, map: &HashMap<&str, RatFunc>) -> Result<RatFunc, SymError> {
        let n = self.num.substitute(map)?;
        let d = self.den.substitute(map)?;
        n.checked_div(&d)
    }

    pub(crate) fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        let n = self.num.eval(env)?;
        let d = self.den.eval(env)?;
        let v = n / d;
        v.is_finite().then_some(v)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::Expr::from_ratfunc(self.clone()))
    }
}

fn canonicalize(mut num: Poly, mut den: Poly) -> RatFunc {
    debug_assert!(!den.is_zero());
    if num.is_zero() {
        return RatFunc::zero();
    }
    if let Some(k) = den.as_constant() {
        if !k.is_one() {
            num = num.scale(&k.recip());
        }
        return RatFunc::from_poly(num);
    }
    let g = num.monomial_content().gcd(&den.monomial_content());
    if !g.is_one() {
        num = num.div_monomial(&g);
        den = den.div_monomial(&g);
    }
    if let Some(k) = den.as_constant() {
        return RatFunc::from_poly(num.scale(&k.recip()));
    }
    if let Some(q) = num.div_exact(&den) {
        return RatFunc::from_poly(q);
    }
    if let Some(q) = den.div_exact(&num) {
        num = Poly::one();
        den = q;
    } else if let Some(g) = univariate_gcd(&num, &den) {
        if g.total_degree() > 0 {
            num = num.div_exact(&g).expect("gcd divides numerator");
            den = den.div_exact(&g).expect("gcd divides denominator");
        }
    }
    if let Some(k) = den.as_constant() {
        return RatFunc::from_poly(num.scale(&k.recip()));
    }
    let lc = den.leading().map(|(_, c)| c.clone()).unwrap();
    if !lc.is_one() {
        let inv = lc.recip();
        num = num.scale(&inv);
        den = den.scale(&inv);
    }
    RatFunc { num, den }
}

/// gcd over Q when both polynomials live in the same single plain variable.
fn univariate_gcd(a: &Poly, b: &Poly) -> Option<Poly> {
    let atoms_a = a.atoms();
    let atoms_b = b.atoms();
    if atoms_a.len() != 1 || atoms_a != atoms_b {
        return None;
    }
    let atom = atoms_a.into_iter().next().unwrap();
    if !atom.is_plain_var() {
        return None;
    }
    let to_dense = |p: &Poly| -> Vec<BigRational> {
        p.coefficients_in(&atom)
            .into_iter()
            .map(|c| c.as_constant().unwrap())
            .collect()
    };
    let g = dense_gcd(to_dense(a), to_dense(b));
    let mut out = Poly::zero();
    for (k, c) in g.into_iter().enumerate() {
        let m = if k == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(atom.clone(), k as u32)])
        };
        out.add_term(m, c);
    }
    Some(out)
}

fn trim(v: &mut Vec<BigRational>) {
    while v.last().map(|c| c.is_zero()).unwrap_or(false) {
        v.pop();
    }
}

fn dense_gcd(mut a: Vec<BigRational>, mut b: Vec<BigRational>) -> Vec<BigRational> {
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = dense_rem(&a, &b);
        a = b;
        b = r;
    }
    if let Some(lc) = a.last().cloned() {
        for c in a.iter_mut() {
            *c = &*c / &lc;
        }
    }
    a
}

fn dense_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lb = b[db].clone();
    while r.len() > db {
        let k = r.len() - 1;
        let q = &r[k] / &lb;
        let shift = k - db;
        for (i, c) in b.iter().enumerate() {
            r[shift + i] -= &q * c;
        }
        r.pop();
        trim(&mut r);
    }
    r
}

fn integer_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        if k.is_multiple_of(2) {
            return None;
        }
        return integer_root(&-n, k).map(|r| -r);
    }
    let r = n.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
}

/// Exact `c^q` when it is rational.
fn rational_root(c: &BigRational, q: &BigRational) -> Option<BigRational> {
    let k = q.denom().to_u32()?;
    let p = q.numer().to_i64()?;
    let n = integer_root(c.numer(), k)?;
    let d = integer_root(c.denom(), k)?;
    let base = BigRational::new(n, d);
    if p >= 0 {
        Some(num_traits::pow(base, p as usize))
    } else {
        if base.is_zero() {
            return None;
        }
        Some(num_traits::pow(base.recip(), (-p) as usize))
    }
}
