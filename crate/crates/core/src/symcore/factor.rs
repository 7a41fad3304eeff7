//! Factorization over the rationals.
//!
//! Multivariate polynomials are mapped to one variable by Kronecker
//! substitution, factored there by Berlekamp-Zassenhaus style modular
//! factorization with Hensel lifting, and true factors are recovered by
//! recombining the univariate pieces and trial division.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use super::poly::{Atom, Monomial, Poly, RatFunc};
use super::Expr;

const MAX_IMAGE_DEGREE: u64 = 300;
const MAX_RECOMBINATION_PIECES: usize = 16;

/// Irreducible factors over Q (with multiplicity, content dropped), sorted by
/// printed form. Non-polynomial input is returned unchanged.
pub fn factor_constraint(e: &Expr) -> Vec<Expr> {
    let r = match e.try_ratfunc() {
        Ok(r) => r,
        Err(_) => return vec![e.clone()],
    };
    if r.is_zero() || !r.is_polynomial() || !r.num.only_plain_vars() {
        return vec![e.clone()];
    }
    let mut out: Vec<Expr> = factor_poly(&r.num)
        .into_iter()
        .flat_map(|(p, k)| std::iter::repeat_n(p, k as usize))
        .map(|p| Expr::from_ratfunc(RatFunc::from_poly(p)))
        .collect();
    out.sort_by_cached_key(|x| x.to_string());
    out
}

/// Factors a polynomial in plain variables into primitive irreducible pieces
/// with positive leading coefficient.
pub(crate) fn factor_poly(p: &Poly) -> Vec<(Poly, u32)> {
    let mut out: BTreeMap<Poly, u32> = BTreeMap::new();
    if p.as_constant().is_some() {
        return Vec::new();
    }
    // Monomial content.
    let mut mono: BTreeMap<Atom, u32> = BTreeMap::new();
    if let Some(first) = p.terms.keys().next() {
        for (a, e) in &first.0 {
            let m = p.terms.keys().map(|m| m.exponent(a)).min().unwrap_or(0);
            if m > 0 {
                mono.insert(a.clone(), m.min(*e));
            }
        }
    }
    let mut rest = p.clone();
    for (a, e) in &mono {
        *out.entry(Poly::atom(a.clone())).or_default() += e;
        let m = Monomial(vec![(a.clone(), *e)]);
        rest = Poly {
            terms: rest.terms.iter().map(|(n, c)| (div_mono(n, &m), c.clone())).collect(),
        };
    }
    let (_, rest) = rest.primitive();
    if rest.as_constant().is_none() {
        for (f, k) in factor_primitive(&rest) {
            *out.entry(f).or_default() += k;
        }
    }
    out.into_iter().collect()
}

fn div_mono(n: &Monomial, m: &Monomial) -> Monomial {
    Monomial(
        n.0.iter()
            .filter_map(|(a, e)| {
                let k = e - m.exponent(a);
                (k > 0).then(|| (a.clone(), k))
            })
            .collect(),
    )
}

/// Primitive, no monomial content, non-constant.
fn factor_primitive(p: &Poly) -> Vec<(Poly, u32)> {
    let atoms: Vec<Atom> = p.atoms().into_iter().collect();
    let degs: Vec<u64> = atoms.iter().map(|a| p.degree_in(a) as u64).collect();
    let mut bases = Vec::with_capacity(atoms.len());
    let mut b: u64 = 1;
    for d in &degs {
        bases.push(b);
        b = match b.checked_mul(d + 1) {
            Some(x) => x,
            None => return vec![(p.clone(), 1)],
        };
    }
    if b - 1 > MAX_IMAGE_DEGREE {
        return vec![(p.clone(), 1)];
    }
    // Kronecker image with integer coefficients.
    let mut image = vec![BigInt::zero(); b as usize];
    for (m, c) in &p.terms {
        let idx: u64 =
            m.0.iter()
                .map(|(a, e)| bases[atoms.iter().position(|x| x == a).unwrap()] * (*e as u64))
                .sum();
        debug_assert!(c.is_integer());
        image[idx as usize] = c.to_integer();
    }
    zp_trim(&mut image);
    let pieces = factor_univariate(&image);
    if pieces.len() > MAX_RECOMBINATION_PIECES {
        return vec![(p.clone(), 1)];
    }
    let decode = |g: &[BigInt]| -> Option<Poly> {
        let mut out = Poly::zero();
        for (k, c) in g.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut rem = k as u64;
            let mut mono = Vec::new();
            for i in (0..atoms.len()).rev() {
                let e = rem / bases[i];
                rem %= bases[i];
                if e > degs[i] {
                    return None;
                }
                if e > 0 {
                    mono.push((atoms[i].clone(), e as u32));
                }
            }
            mono.sort();
            out = out.add(&Poly::from_term(Monomial(mono), BigRational::from_integer(c.clone())));
        }
        Some(out)
    };
    let mut found: BTreeMap<Poly, u32> = BTreeMap::new();
    let mut remaining = p.clone();
    let mut items: Vec<Vec<BigInt>> = pieces;
    let mut size = 1;
    while 2 * size <= items.len() {
        let mut hit = false;
        for subset in Combinations::new(items.len(), size) {
            let mut g = vec![BigInt::one()];
            for &i in &subset {
                g = zp_mul(&g, &items[i]);
            }
            let Some(cand) = decode(&g) else { continue };
            let (_, cand) = cand.primitive();
            if cand.as_constant().is_some() {
                continue;
            }
            if let Some(q) = remaining.div_exact(&cand) {
                remaining = q;
                *found.entry(cand).or_default() += 1;
                let mut idx = subset.clone();
                idx.sort_unstable_by(|a, b| b.cmp(a));
                for i in idx {
                    items.remove(i);
                }
                hit = true;
                break;
            }
        }
        if !hit {
            size += 1;
        }
    }
    let (_, remaining) = remaining.primitive();
    if remaining.as_constant().is_none() {
        *found.entry(remaining).or_default() += 1;
    }
    found.into_iter().collect()
}

struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

// ---------------------------------------------------------------------------
// Dense integer polynomials, coefficients low to high.

type ZPoly = Vec<BigInt>;

fn zp_trim(a: &mut ZPoly) {
    while a.last().map(|c| c.is_zero()).unwrap_or(false) {
        a.pop();
    }
}

fn zp_deg(a: &[BigInt]) -> usize {
    a.len().saturating_sub(1)
}

fn zp_mul(a: &[BigInt], b: &[BigInt]) -> ZPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    zp_trim(&mut out);
    out
}

fn zp_content(a: &[BigInt]) -> BigInt {
    a.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
}

fn zp_primitive(a: &[BigInt]) -> ZPoly {
    let mut g = zp_content(a);
    if g.is_zero() {
        return Vec::new();
    }
    if a.last().unwrap().is_negative() {
        g = -g;
    }
    a.iter().map(|c| c / &g).collect()
}

/// Exact division in Z[t].
fn zp_div_exact(a: &[BigInt], b: &[BigInt]) -> Option<ZPoly> {
    if b.is_empty() {
        return None;
    }
    if a.is_empty() {
        return Some(Vec::new());
    }
    if a.len() < b.len() {
        return None;
    }
    let mut r = a.to_vec();
    let db = zp_deg(b);
    let lb = b.last().unwrap();
    let mut q = vec![BigInt::zero(); a.len() - b.len() + 1];
    for k in (0..q.len()).rev() {
        let top = &r[k + db];
        if top.is_zero() {
            continue;
        }
        let (c, rem) = top.div_rem(lb);
        if !rem.is_zero() {
            return None;
        }
        for (i, y) in b.iter().enumerate() {
            r[k + i] -= &c * y;
        }
        q[k] = c;
    }
    if r.iter().any(|c| !c.is_zero()) {
        return None;
    }
    zp_trim(&mut q);
    Some(q)
}

// Rational dense polynomials for square-free decomposition.

type QPoly = Vec<BigRational>;

fn qp_trim(a: &mut QPoly) {
    while a.last().map(|c| c.is_zero()).unwrap_or(false) {
        a.pop();
    }
}

fn qp_from_z(a: &[BigInt]) -> QPoly {
    a.iter().map(|c| BigRational::from_integer(c.clone())).collect()
}

fn qp_to_primitive_z(a: &[BigRational]) -> ZPoly {
    let den = a.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let z: ZPoly = a
        .iter()
        .map(|c| (c * BigRational::from_integer(den.clone())).to_integer())
        .collect();
    zp_primitive(&z)
}

fn qp_divrem(a: &[BigRational], b: &[BigRational]) -> (QPoly, QPoly) {
    let mut r = a.to_vec();
    qp_trim(&mut r);
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let db = b.len() - 1;
    let lb = b[db].clone();
    let mut q = vec![BigRational::zero(); r.len() - db];
    while r.len() > db {
        let k = r.len() - 1;
        let c = &r[k] / &lb;
        let shift = k - db;
        for (i, y) in b.iter().enumerate() {
            r[shift + i] -= &c * y;
        }
        q[shift] = c;
        r.pop();
        qp_trim(&mut r);
    }
    qp_trim(&mut q);
    (q, r)
}

/// Pseudo-remainder of a by b in Z[t].
fn zp_prem(a: &[BigInt], b: &[BigInt]) -> ZPoly {
    let mut r = a.to_vec();
    zp_trim(&mut r);
    let db = zp_deg(b);
    let lb = b.last().unwrap();
    while !r.is_empty() && zp_deg(&r) >= db {
        let lr = r.last().unwrap().clone();
        let shift = zp_deg(&r) - db;
        for c in r.iter_mut() {
            *c *= lb;
        }
        for (i, y) in b.iter().enumerate() {
            r[shift + i] -= &lr * y;
        }
        r.pop();
        zp_trim(&mut r);
    }
    r
}

/// Monic gcd over Q, computed by a primitive remainder sequence in Z[t].
fn qp_gcd(a: &[BigRational], b: &[BigRational]) -> QPoly {
    let mut a = qp_to_primitive_z(a);
    let mut b = qp_to_primitive_z(b);
    while !b.is_empty() {
        let r = zp_primitive(&zp_prem(&a, &b));
        a = b;
        b = r;
    }
    let mut g = qp_from_z(&a);
    if let Some(lc) = g.last().cloned() {
        for c in g.iter_mut() {
            *c = &*c / &lc;
        }
    }
    g
}

/// True when f reduces to a square-free polynomial of the same degree modulo some small prime.
fn square_free_mod_p(f: &[BigInt]) -> bool {
    let mut tried = 0;
    let mut p = 1009u64;
    while tried < 4 && p < 20_000 {
        p += 2;
        if !is_prime(p) {
            continue;
        }
        let fp = fp_from_z(f, p);
        if fp.len() != f.len() {
            continue;
        }
        tried += 1;
        let fm = fp_monic(&fp, p);
        if fp_gcd(&fm, &fp_derivative(&fm, p), p).len() <= 1 {
            return true;
        }
    }
    false
}

fn qp_derivative(a: &[BigRational]) -> QPoly {
    let mut out: QPoly = a
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
        .collect();
    qp_trim(&mut out);
    out
}

fn qp_sub(a: &[BigRational], b: &[BigRational]) -> QPoly {
    let n = a.len().max(b.len());
    let mut out: QPoly = (0..n)
        .map(|i| {
            a.get(i).cloned().unwrap_or_else(BigRational::zero) - b.get(i).cloned().unwrap_or_else(BigRational::zero)
        })
        .collect();
    qp_trim(&mut out);
    out
}

/// Yun's square-free decomposition: f = c * prod a_i^i.
fn square_free(f: &[BigInt]) -> Vec<(ZPoly, u32)> {
    if square_free_mod_p(f) {
        return vec![(zp_primitive(f), 1)];
    }
    let f = qp_from_z(f);
    let fp = qp_derivative(&f);
    let g = qp_gcd(&f, &fp);
    if g.len() <= 1 {
        return vec![(qp_to_primitive_z(&f), 1)];
    }
    let mut out = Vec::new();
    let mut b = qp_divrem(&f, &g).0;
    let c = qp_divrem(&fp, &g).0;
    let mut d = qp_sub(&c, &qp_derivative(&b));
    let mut i = 1;
    while b.len() > 1 {
        let a = qp_gcd(&b, &d);
        let nb = qp_divrem(&b, &a).0;
        let c = qp_divrem(&d, &a).0;
        d = qp_sub(&c, &qp_derivative(&nb));
        if a.len() > 1 {
            out.push((qp_to_primitive_z(&a), i));
        }
        b = nb;
        i += 1;
    }
    out
}

/// Irreducible factors of a nonzero integer polynomial, listed with repetition.
fn factor_univariate(f: &[BigInt]) -> Vec<ZPoly> {
    let mut out = Vec::new();
    for (part, k) in square_free(f) {
        if part.len() <= 1 {
            continue;
        }
        for g in zassenhaus(&part) {
            for _ in 0..k {
                out.push(g.clone());
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Arithmetic in F_p[t].

type FPoly = Vec<u64>;

fn fp_trim(a: &mut FPoly) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn fp_from_z(a: &[BigInt], p: u64) -> FPoly {
    let pb = BigInt::from(p);
    let mut out: FPoly = a.iter().map(|c| c.mod_floor(&pb).to_u64().unwrap()).collect();
    fp_trim(&mut out);
    out
}

fn mod_pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn mod_inv(a: u64, p: u64) -> u64 {
    mod_pow(a, p - 2, p)
}

fn fp_sub(a: &[u64], b: &[u64], p: u64) -> FPoly {
    let n = a.len().max(b.len());
    let mut out: FPoly = (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0) + p - b.get(i).copied().unwrap_or(0)) % p)
        .collect();
    fp_trim(&mut out);
    out
}

fn fp_add(a: &[u64], b: &[u64], p: u64) -> FPoly {
    let n = a.len().max(b.len());
    let mut out: FPoly = (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0)) % p)
        .collect();
    fp_trim(&mut out);
    out
}

fn fp_mul(a: &[u64], b: &[u64], p: u64) -> FPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    fp_trim(&mut out);
    out
}

fn fp_divrem(a: &[u64], b: &[u64], p: u64) -> (FPoly, FPoly) {
    let mut r = a.to_vec();
    fp_trim(&mut r);
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let db = b.len() - 1;
    let inv = mod_inv(b[db], p);
    let mut q = vec![0u64; r.len() - db];
    while r.len() > db {
        let k = r.len() - 1;
        let c = r[k] * inv % p;
        let shift = k - db;
        for (i, &y) in b.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p - c * y % p) % p;
        }
        q[shift] = c;
        r.truncate(k);
        fp_trim(&mut r);
    }
    fp_trim(&mut q);
    (q, r)
}

fn fp_monic(a: &[u64], p: u64) -> FPoly {
    match a.last() {
        None => Vec::new(),
        Some(&lc) => {
            let inv = mod_inv(lc, p);
            a.iter().map(|c| c * inv % p).collect()
        }
    }
}

fn fp_gcd(a: &[u64], b: &[u64], p: u64) -> FPoly {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    fp_trim(&mut a);
    fp_trim(&mut b);
    while !b.is_empty() {
        let (_, r) = fp_divrem(&a, &b, p);
        a = b;
        b = r;
    }
    fp_monic(&a, p)
}

/// Returns (g, s, t) with s*a + t*b = g monic.
fn fp_xgcd(a: &[u64], b: &[u64], p: u64) -> (FPoly, FPoly, FPoly) {
    let (mut r0, mut r1) = (a.to_vec(), b.to_vec());
    let (mut s0, mut s1) = (vec![1u64], Vec::new());
    let (mut t0, mut t1) = (Vec::new(), vec![1u64]);
    while !r1.is_empty() {
        let (q, r) = fp_divrem(&r0, &r1, p);
        let s = fp_sub(&s0, &fp_mul(&q, &s1, p), p);
        let t = fp_sub(&t0, &fp_mul(&q, &t1, p), p);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
        t0 = std::mem::replace(&mut t1, t);
    }
    let inv = mod_inv(*r0.last().unwrap(), p);
    let sc = |v: FPoly| -> FPoly {
        let mut out: FPoly = v.iter().map(|c| c * inv % p).collect();
        fp_trim(&mut out);
        out
    };
    (sc(r0), sc(s0), sc(t0))
}

fn fp_powmod(base: &[u64], exp: &BigUint, modulus: &[u64], p: u64) -> FPoly {
    let mut acc = vec![1u64];
    let base = fp_divrem(base, modulus, p).1;
    let bits = exp.bits();
    for i in (0..bits).rev() {
        acc = fp_divrem(&fp_mul(&acc, &acc, p), modulus, p).1;
        if exp.bit(i) {
            acc = fp_divrem(&fp_mul(&acc, &base, p), modulus, p).1;
        }
    }
    acc
}

fn fp_derivative(a: &[u64], p: u64) -> FPoly {
    let mut out: FPoly = a
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| (i as u64 % p) * c % p)
        .collect();
    fp_trim(&mut out);
    out
}

fn distinct_degree(f: &[u64], p: u64) -> Vec<(FPoly, usize)> {
    let mut out = Vec::new();
    let mut f = f.to_vec();
    let x = vec![0u64, 1];
    let mut h = x.clone();
    let pe = BigUint::from(p);
    let mut i = 1;
    while f.len() > 2 * i {
        h = fp_powmod(&h, &pe, &f, p);
        let g = fp_gcd(&f, &fp_sub(&h, &x, p), p);
        if g.len() > 1 {
            f = fp_divrem(&f, &g, p).0;
            h = fp_divrem(&h, &f, p).1;
            out.push((g, i));
        }
        i += 1;
    }
    if f.len() > 1 {
        let d = f.len() - 1;
        out.push((fp_monic(&f, p), d));
    }
    out
}

fn equal_degree(g: &[u64], d: usize, p: u64, rng: &mut ChaCha8Rng, out: &mut Vec<FPoly>) {
    let n = g.len() - 1;
    if n == d {
        out.push(g.to_vec());
        return;
    }
    let exp = (num_traits::pow(BigUint::from(p), d) - BigUint::one()) / BigUint::from(2u32);
    loop {
        let mut a: FPoly = (0..n).map(|_| rng.gen_range(0..p)).collect();
        fp_trim(&mut a);
        if a.len() < 2 {
            continue;
        }
        let b = fp_sub(&fp_powmod(&a, &exp, g, p), &[1], p);
        let u = fp_gcd(g, &b, p);
        if u.len() > 1 && u.len() < g.len() {
            let v = fp_monic(&fp_divrem(g, &u, p).0, p);
            equal_degree(&u, d, p, rng, out);
            equal_degree(&v, d, p, rng, out);
            return;
        }
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn modular_factors(f: &[BigInt], p: u64, rng: &mut ChaCha8Rng) -> Option<Vec<FPoly>> {
    let fp = fp_from_z(f, p);
    if fp.len() != f.len() {
        return None;
    }
    let fm = fp_monic(&fp, p);
    if fp_gcd(&fm, &fp_derivative(&fm, p), p).len() > 1 {
        return None;
    }
    let mut out = Vec::new();
    for (g, d) in distinct_degree(&fm, p) {
        equal_degree(&g, d, p, rng, &mut out);
    }
    Some(out)
}

fn sym_mod(c: &BigInt, m: &BigInt) -> BigInt {
    let r = c.mod_floor(m);
    if &r * 2 > *m {
        r - m
    } else {
        r
    }
}

fn fp_to_z(a: &[u64]) -> ZPoly {
    a.iter().map(|&c| BigInt::from(c)).collect()
}

fn zp_mod(a: &[BigInt], m: &BigInt) -> ZPoly {
    let mut out: ZPoly = a.iter().map(|c| c.mod_floor(m)).collect();
    zp_trim(&mut out);
    out
}

/// Lifts F = G*H (mod p) to (mod modulus), with G, H monic.
fn hensel_pair(f: &[BigInt], g0: &FPoly, h0: &FPoly, p: u64, modulus: &BigInt) -> (ZPoly, ZPoly) {
    let (_, s, t) = fp_xgcd(g0, h0, p);
    let mut g = fp_to_z(g0);
    let mut h = fp_to_z(h0);
    let pb = BigInt::from(p);
    let mut pj = pb.clone();
    while &pj < modulus {
        let gh = zp_mul(&g, &h);
        let n = f.len().max(gh.len());
        let diff: ZPoly = (0..n)
            .map(|i| f.get(i).cloned().unwrap_or_else(BigInt::zero) - gh.get(i).cloned().unwrap_or_else(BigInt::zero))
            .collect();
        let e: FPoly = {
            let mut v: FPoly = diff
                .iter()
                .map(|c| (c / &pj).mod_floor(&pb).to_u64().unwrap())
                .collect();
            fp_trim(&mut v);
            v
        };
        if !e.is_empty() {
            let et = fp_mul(&e, &t, p);
            let (q, dg) = fp_divrem(&et, g0, p);
            let dh = fp_add(&fp_mul(&e, &s, p), &fp_mul(&q, h0, p), p);
            for (i, c) in dg.iter().enumerate() {
                g[i] += &pj * c;
            }
            for (i, c) in dh.iter().enumerate() {
                if i < h.len() {
                    h[i] += &pj * c;
                } else {
                    h.push(&pj * c);
                }
            }
        }
        pj *= &pb;
    }
    (zp_mod(&g, modulus), zp_mod(&h, modulus))
}

fn zassenhaus(f: &[BigInt]) -> Vec<ZPoly> {
    let n = zp_deg(f);
    if n <= 1 {
        return vec![zp_primitive(f)];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xfac7);
    let mut best: Option<(u64, Vec<FPoly>)> = None;
    let mut tried = 0;
    let mut cand = 1009u64;
    while tried < 3 && cand < 200_000 {
        cand += 2;
        if !is_prime(cand) {
            continue;
        }
        if let Some(fs) = modular_factors(f, cand, &mut rng) {
            tried += 1;
            if fs.len() == 1 {
                return vec![zp_primitive(f)];
            }
            if best.as_ref().map(|(_, b)| fs.len() < b.len()).unwrap_or(true) {
                best = Some((cand, fs));
            }
        }
    }
    let Some((p, factors)) = best else {
        return vec![zp_primitive(f)];
    };
    let lc = f.last().unwrap().clone();
    let norm = f.iter().map(|c| c * c).fold(BigInt::zero(), |a, b| a + b).sqrt() + 1;
    let bound = norm * (BigInt::one() << n) * lc.abs() * 2;
    let pb = BigInt::from(p);
    let mut modulus = pb.clone();
    while modulus <= bound {
        modulus *= &pb;
    }
    // Monic version of f modulo p^k.
    let lc_inv = {
        let e = lc.extended_gcd(&modulus);
        e.x.mod_floor(&modulus)
    };
    let mut current: ZPoly = zp_mod(&f.iter().map(|c| c * &lc_inv).collect::<Vec<_>>(), &modulus);
    let r = factors.len();
    let mut lifted: Vec<ZPoly> = Vec::with_capacity(r);
    for i in 0..r - 1 {
        let g0 = &factors[i];
        let mut h0 = vec![1u64];
        for fj in &factors[i + 1..] {
            h0 = fp_mul(&h0, fj, p);
        }
        let (g, h) = hensel_pair(&current, g0, &h0, p, &modulus);
        lifted.push(g);
        current = h;
    }
    lifted.push(current);

    let mut out = Vec::new();
    let mut f_cur = f.to_vec();
    let mut size = 1;
    while 2 * size <= lifted.len() {
        let mut hit = false;
        for subset in Combinations::new(lifted.len(), size) {
            let lcc = f_cur.last().unwrap().clone();
            let mut g = vec![lcc];
            for &i in &subset {
                g = zp_mod(&zp_mul(&g, &lifted[i]), &modulus);
            }
            let g: ZPoly = g.iter().map(|c| sym_mod(c, &modulus)).collect();
            let g = zp_primitive(&g);
            if g.len() < 2 {
                continue;
            }
            if let Some(q) = zp_div_exact(&f_cur, &g) {
                f_cur = q;
                out.push(g);
                let mut idx = subset.clone();
                idx.sort_unstable_by(|a, b| b.cmp(a));
                for i in idx {
                    lifted.remove(i);
                }
                hit = true;
                break;
            }
        }
        if !hit {
            size += 1;
        }
    }
    if f_cur.len() > 1 {
        out.push(zp_primitive(&f_cur));
    }
    out
}
