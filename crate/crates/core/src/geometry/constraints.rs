use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::symcore::{is_zero, CompiledExpr, Confidence, Expr, SimplifyConfig, SymError};

/// Where a constraint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Integrability,
    Tangency { level: usize },
    Compatibility,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub expr: Expr,
    pub provenance: Provenance,
}

/// Ordered, duplicate-free list of constraint functions.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ConstraintSet {
    constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> ConstraintSet {
        ConstraintSet::default()
    }

    /// Adds a constraint unless it is exactly zero or already present.
    /// Returns whether the set changed.
    pub fn push(&mut self, expr: &Expr, provenance: Provenance) -> bool {
        if expr.is_exact_zero() {
            return false;
        }
        let e = expr.primitive_numerator();
        if self.constraints.iter().any(|c| c.expr == e) {
            return false;
        }
        self.constraints.push(Constraint { expr: e, provenance });
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter()
    }

    pub fn exprs(&self) -> Vec<Expr> {
        self.constraints.iter().map(|c| c.expr.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn contains_all(&self, other: &ConstraintSet) -> bool {
        other
            .constraints
            .iter()
            .all(|c| self.constraints.iter().any(|d| d.expr == c.expr))
    }
}

/// Verdict on whether a function vanishes on a constraint set.
#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Zero(Confidence),
    /// Does not vanish; carries the reduced expression.
    Nonzero(Confidence, Expr),
    Undecided(Expr),
}

/// Reduction modulo a constraint set: explicit substitutions for constraints
/// that are linear in some coordinate, numeric sampling for the rest.
#[derive(Debug, Clone)]
pub struct Reducer {
    subs: Vec<(String, Expr)>,
    residual: Vec<Expr>,
    cfg: SimplifyConfig,
}

impl Reducer {
    /// Builds the reducer. `Err(witness)` in the outer `Ok` means some
    /// constraint reduced to a nonzero constant, so the set is empty.
    pub fn build(
        constraints: &[Expr],
        elimination_order: &[String],
        cfg: &SimplifyConfig,
    ) -> Result<std::result::Result<Reducer, Expr>> {
        let mut subs: Vec<(String, Expr)> = Vec::new();
        // Numerator each substitution was solved from.
        let mut sources: Vec<Expr> = Vec::new();
        let mut pending: Vec<Expr> = constraints.to_vec();
        let mut residual = Vec::new();
        loop {
            let mut progress = false;
            let mut next = Vec::new();
            for c in pending {
                let r = apply_subs(&c, &subs)?;
                if r.is_exact_zero() {
                    continue;
                }
                if r.is_constant() {
                    return Ok(Err(r));
                }
                let (num, _) = r.numer_denom();
                match solve_linear(&num, elimination_order) {
                    Some((var, value)) => {
                        // A pole means the earlier solve divided by a coefficient that
                        // vanishes here; that constraint is reduced again from scratch.
                        let mut i = 0;
                        while i < subs.len() {
                            match subs[i].1.subs_pairs(&[(var.as_str(), value.clone())]) {
                                Ok(v) => {
                                    subs[i].1 = v;
                                    i += 1;
                                }
                                Err(SymError::DivisionByZero) => {
                                    subs.remove(i);
                                    next.push(sources.remove(i));
                                }
                                Err(e) => return Err(e.into()),
                            }
                        }
                        subs.push((var, value));
                        sources.push(num);
                        progress = true;
                    }
                    None => next.push(r),
                }
            }
            pending = next;
            if !progress {
                break;
            }
        }
        for c in pending {
            let r = apply_subs(&c, &subs)?;
            if r.is_exact_zero() {
                continue;
            }
            if r.is_constant() {
                return Ok(Err(r));
            }
            residual.push(r);
        }
        Ok(Ok(Reducer {
            subs,
            residual,
            cfg: cfg.clone(),
        }))
    }

    pub fn substitutions(&self) -> &[(String, Expr)] {
        &self.subs
    }

    pub fn residual(&self) -> &[Expr] {
        &self.residual
    }

    pub fn reduce(&self, e: &Expr) -> Result<Expr> {
        apply_subs(e, &self.subs)
    }

    /// Decides whether `e` vanishes on the zero set.
    pub fn vanishes(&self, e: &Expr) -> Result<Membership> {
        let r = self.reduce(e)?;
        if r.is_exact_zero() {
            return Ok(Membership::Zero(Confidence::Exact));
        }
        if self.residual.is_empty() {
            let v = is_zero(&r, &self.cfg)?;
            return Ok(if v.is_zero() {
                Membership::Zero(v.confidence())
            } else {
                Membership::Nonzero(v.confidence(), r)
            });
        }
        Ok(self.sample_on_zero_set(&r))
    }

    fn sample_on_zero_set(&self, e: &Expr) -> Membership {
        let mut vars: Vec<String> = e.free_vars().into_iter().collect();
        for c in &self.residual {
            for v in c.free_vars() {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        vars.sort();
        // One distinct solve variable per residual constraint.
        let mut solve_for = Vec::new();
        for c in &self.residual {
            let fv = c.free_vars();
            match vars
                .iter()
                .position(|v| fv.contains(v) && !solve_for.contains(&vars.iter().position(|w| w == v).unwrap()))
            {
                Some(i) => solve_for.push(i),
                None => return Membership::Undecided(e.clone()),
            }
        }
        let compile = |x: &Expr| CompiledExpr::compile(x, &vars).ok();
        let Some(target) = compile(e) else {
            return Membership::Undecided(e.clone());
        };
        let mut eqs = Vec::new();
        let mut jac = Vec::new();
        for c in &self.residual {
            let Some(ce) = compile(c) else {
                return Membership::Undecided(e.clone());
            };
            eqs.push(ce);
            let mut row = Vec::new();
            for &j in &solve_for {
                match compile(&c.diff(&vars[j])) {
                    Some(d) => row.push(d),
                    None => return Membership::Undecided(e.clone()),
                }
            }
            jac.push(row);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ 0x9e37_79b9);
        let need = self.cfg.sample_count;
        let mut found = 0;
        for _ in 0..need * 20 {
            let mut x: Vec<f64> = vars.iter().map(|_| rng.gen_range(-1.5..1.5)).collect();
            if !newton(&eqs, &jac, &solve_for, &mut x) {
                continue;
            }
            let v = target.eval(&x);
            if !v.is_finite() {
                continue;
            }
            found += 1;
            if v.abs() > self.cfg.tolerance.max(1e-8) * (1.0 + x.iter().fold(0.0f64, |m, a| m.max(a.abs()))) {
                return Membership::Nonzero(Confidence::Numeric, e.clone());
            }
            if found >= need {
                return Membership::Zero(Confidence::Numeric);
            }
        }
        Membership::Undecided(e.clone())
    }
}

fn newton(eqs: &[CompiledExpr], jac: &[Vec<CompiledExpr>], solve_for: &[usize], x: &mut [f64]) -> bool {
    let k = eqs.len();
    for _ in 0..60 {
        let r: Vec<f64> = eqs.iter().map(|e| e.eval(x)).collect();
        if r.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if r.iter().all(|v| v.abs() < 1e-13) {
            return true;
        }
        let mut a: Vec<Vec<f64>> = jac.iter().map(|row| row.iter().map(|d| d.eval(x)).collect()).collect();
        let mut b: Vec<f64> = r.iter().map(|v| -v).collect();
        let Some(dx) = solve_dense(&mut a, &mut b) else {
            return false;
        };
        for (i, &j) in solve_for.iter().enumerate().take(k) {
            x[j] += dx[i];
        }
    }
    eqs.iter().all(|e| e.eval(x).abs() < 1e-11)
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-14 {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            if f != 0.0 {
                for j in c..n {
                    a[i][j] -= f * a[c][j];
                }
                b[i] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn apply_subs(e: &Expr, subs: &[(String, Expr)]) -> Result<Expr> {
    if subs.is_empty() {
        return Ok(e.clone());
    }
    let map: HashMap<String, Expr> = subs.iter().cloned().collect();
    Ok(e.subs(&map)?)
}

/// Finds a coordinate in which `c` is linear, preferring a constant
/// coefficient, and returns its solved value.
fn solve_linear(c: &Expr, order: &[String]) -> Option<(String, Expr)> {
    let mut fallback = None;
    for var in order {
        if !c.contains_var(var) {
            continue;
        }
        let Some(coeffs) = c.poly_coefficients(var) else {
            continue;
        };
        if coeffs.len() != 2 {
            continue;
        }
        let a1 = &coeffs[1];
        let a0 = &coeffs[0];
        if a1.is_constant() {
            let value = (-a0).checked_div(a1).ok()?;
            return Some((var.clone(), value));
        }
        if fallback.is_none() && a1.is_polynomial() {
            if let Ok(value) = (-a0).checked_div(a1) {
                fallback = Some((var.clone(), value));
            }
        }
    }
    fallback
}
