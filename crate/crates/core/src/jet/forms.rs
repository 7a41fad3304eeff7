use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{ChartSpec, VectorField};
use crate::symcore::{is_zero, Confidence, Expr, SimplifyConfig};

/// Differential form in the coordinate cobasis of a chart. Keys are strictly
/// increasing tuples of chart-coordinate indices.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedForm {
    chart: Arc<ChartSpec>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

/// Sorts `idx` in place and returns the permutation sign, or `None` on a repeat.
fn sort_sign(idx: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl AdaptedForm {
    pub fn zero(chart: &Arc<ChartSpec>, degree: usize) -> AdaptedForm {
        AdaptedForm {
            chart: chart.clone(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// The 0-form `f`.
    pub fn function(chart: &Arc<ChartSpec>, f: Expr) -> AdaptedForm {
        let mut out = AdaptedForm::zero(chart, 0);
        out.add_term(Vec::new(), f);
        out
    }

    /// The coordinate differential d`name`.
    pub fn differential(chart: &Arc<ChartSpec>, name: &str) -> Result<AdaptedForm> {
        let i = chart
            .index_of(name)
            .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))?;
        Ok(AdaptedForm::basis(chart, vec![i], Expr::one()))
    }

    /// `coeff` times the wedge of the listed differentials, in the given order.
    pub fn basis(chart: &Arc<ChartSpec>, mut idx: Vec<usize>, coeff: Expr) -> AdaptedForm {
        let mut out = AdaptedForm::zero(chart, idx.len());
        if let Some(s) = sort_sign(&mut idx) {
            out.add_term(idx, coeff * Expr::int(s));
        }
        out
    }

    /// d^m x = dx¹ ∧ … ∧ dx^m on the base.
    pub fn volume(chart: &Arc<ChartSpec>) -> AdaptedForm {
        AdaptedForm::basis(chart, (0..chart.m()).collect(), Expr::one())
    }

    /// d^{m−1}x_μ = i(∂/∂x^μ) d^m x.
    pub fn volume_minor(chart: &Arc<ChartSpec>, mu: usize) -> AdaptedForm {
        let dx = VectorField::coordinate(chart, &chart.base()[mu]).expect("base coordinate");
        AdaptedForm::volume(chart).interior(&dx).expect("same chart")
    }

    fn add_term(&mut self, idx: Vec<usize>, coeff: Expr) {
        if coeff.is_exact_zero() {
            return;
        }
        let entry = self.terms.entry(idx);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &coeff;
                if s.is_exact_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    /// Coefficient on the wedge of the named differentials, taken in the given
    /// order (so swapping two names flips the sign).
    pub fn coefficient(&self, names: &[&str]) -> Result<Expr> {
        let mut idx = names
            .iter()
            .map(|n| {
                self.chart
                    .index_of(n)
                    .ok_or_else(|| Error::UnknownCoordinate(n.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(match sort_sign(&mut idx) {
            Some(s) => self.coefficient_at(&idx) * Expr::int(s),
            None => Expr::zero(),
        })
    }

    /// Coefficient on a strictly increasing index tuple.
    pub fn coefficient_at(&self, idx: &[usize]) -> Expr {
        self.terms.get(idx).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Zero verdict over all coefficients, with the weakest confidence used.
    pub fn vanishes(&self, cfg: &SimplifyConfig) -> Result<(bool, Confidence)> {
        let mut conf = Confidence::Exact;
        for c in self.terms.values() {
            let v = is_zero(c, cfg)?;
            conf = conf.and(v.confidence());
            if !v.is_zero() {
                return Ok((false, conf));
            }
        }
        Ok((true, conf))
    }

    fn check(&self, other: &AdaptedForm) -> Result<()> {
        if !crate::geometry::same_chart(&self.chart, &other.chart) {
            return Err(Error::ChartMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &AdaptedForm) -> Result<AdaptedForm> {
        self.check(other)?;
        if self.degree != other.degree && !self.is_exact_zero() && !other.is_exact_zero() {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        let degree = if self.is_exact_zero() {
            other.degree
        } else {
            self.degree
        };
        let mut out = self.clone();
        out.degree = degree;
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &AdaptedForm) -> Result<AdaptedForm> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> AdaptedForm {
        self.scale(&Expr::int(-1))
    }

    pub fn scale(&self, k: &Expr) -> AdaptedForm {
        let mut out = AdaptedForm::zero(&self.chart, self.degree);
        for (idx, c) in &self.terms {
            out.add_term(idx.clone(), c * k);
        }
        out
    }

    pub fn wedge(&self, other: &AdaptedForm) -> Result<AdaptedForm> {
        self.check(other)?;
        let mut out = AdaptedForm::zero(&self.chart, self.degree + other.degree);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut idx: Vec<usize> = a.iter().chain(b).copied().collect();
                if let Some(s) = sort_sign(&mut idx) {
                    out.add_term(idx, ca * cb * Expr::int(s));
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative. Parameters are treated as constants.
    pub fn d(&self) -> AdaptedForm {
        let coords = self.chart.coords();
        let mut out = AdaptedForm::zero(&self.chart, self.degree + 1);
        for (idx, c) in &self.terms {
            for (i, name) in coords.iter().enumerate() {
                if idx.contains(&i) || !c.contains_var(name) {
                    continue;
                }
                let mut k: Vec<usize> = std::iter::once(i).chain(idx.iter().copied()).collect();
                let s = sort_sign(&mut k).expect("distinct indices");
                out.add_term(k, c.diff(name) * Expr::int(s));
            }
        }
        out
    }

    /// Interior product i(X)ω.
    pub fn interior(&self, x: &VectorField) -> Result<AdaptedForm> {
        if !crate::geometry::same_chart(&self.chart, x.chart()) {
            return Err(Error::ChartMismatch);
        }
        if self.degree == 0 {
            return Ok(AdaptedForm::zero(&self.chart, 0));
        }
        let mut out = AdaptedForm::zero(&self.chart, self.degree - 1);
        for (idx, c) in &self.terms {
            for (j, &i) in idx.iter().enumerate() {
                let xi = x.component(i);
                if xi.is_exact_zero() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(j);
                let sign = if j % 2 == 0 { Expr::one() } else { Expr::int(-1) };
                out.add_term(rest, c * xi * sign);
            }
        }
        Ok(out)
    }

    /// Lie derivative via Cartan's formula L(X)ω = d i(X)ω + i(X) dω.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<AdaptedForm> {
        let a = self.interior(x)?.d();
        let b = self.d().interior(x)?;
        let mut out = a.add(&b)?;
        out.degree = self.degree;
        Ok(out)
    }

    /// Replaces every coordinate differential by the given 1-form image
    /// (`None` keeps it) and every coefficient by `subs` applied to it.
    pub fn substitute(
        &self,
        images: &[Option<AdaptedForm>],
        subs: &std::collections::HashMap<String, Expr>,
    ) -> Result<AdaptedForm> {
        let mut out = AdaptedForm::zero(&self.chart, self.degree);
        for (idx, c) in &self.terms {
            let coeff = if subs.is_empty() { c.clone() } else { c.subs(subs)? };
            let mut acc = AdaptedForm::function(&self.chart, coeff);
            for &i in idx {
                let f = match &images[i] {
                    Some(f) => f.clone(),
                    None => AdaptedForm::basis(&self.chart, vec![i], Expr::one()),
                };
                acc = acc.wedge(&f)?;
            }
            for (k, v) in acc.terms {
                out.add_term(k, v);
            }
        }
        Ok(out)
    }

    /// Pullback along x ↦ (x, values(x)), where `values` maps non-base
    /// coordinates to functions of the base coordinates.
    pub fn pullback(&self, values: &std::collections::HashMap<String, Expr>) -> Result<AdaptedForm> {
        let coords = self.chart.coords();
        let base = self.chart.base();
        let images: Vec<Option<AdaptedForm>> = coords
            .iter()
            .map(|name| {
                values.get(name).map(|f| {
                    let mut df = AdaptedForm::zero(&self.chart, 1);
                    for (mu, x) in base.iter().enumerate() {
                        df.add_term(vec![mu], f.diff(x));
                    }
                    df
                })
            })
            .collect();
        self.substitute(&images, values)
    }

    /// Rewrites dy^A = θ^A + v^A_μ dx^μ and drops every term containing a θ.
    pub fn contact_reduce(&self) -> Result<AdaptedForm> {
        self.chart.require_jet()?;
        let m = self.chart.m();
        let mut images: Vec<Option<AdaptedForm>> = vec![None; self.chart.dim()];
        for a in 0..self.chart.n() {
            let mut f = AdaptedForm::zero(&self.chart, 1);
            for mu in 0..m {
                f.add_term(vec![mu], Expr::var(self.chart.jet_var(a, mu)));
            }
            images[self.chart.fiber_index(a)] = Some(f);
        }
        self.substitute(&images, &Default::default())
    }

    /// Applies `f` to every coefficient.
    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Result<Expr>) -> Result<AdaptedForm> {
        let mut out = AdaptedForm::zero(&self.chart, self.degree);
        for (idx, c) in &self.terms {
            out.add_term(idx.clone(), f(c)?);
        }
        Ok(out)
    }

    fn basis_name(&self, idx: &[usize]) -> String {
        let coords = self.chart.coords();
        idx.iter()
            .map(|&i| format!("d{}", coords[i]))
            .collect::<Vec<_>>()
            .join("^")
    }
}

impl fmt::Display for AdaptedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (idx, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            if idx.is_empty() {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})*{}", self.basis_name(idx))?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct TermOut {
    basis: Vec<String>,
    coefficient: String,
}

impl Serialize for AdaptedForm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let coords = self.chart.coords();
        let mut seq = s.serialize_seq(Some(self.terms.len()))?;
        for (idx, c) in &self.terms {
            seq.serialize_element(&TermOut {
                basis: idx.iter().map(|&i| format!("d{}", coords[i])).collect(),
                coefficient: c.to_string(),
            })?;
        }
        seq.end()
    }
}

/// The generators θ^A = dy^A − v^A_μ dx^μ of the contact module.
pub fn contact_forms(chart: &Arc<ChartSpec>) -> Result<Vec<AdaptedForm>> {
    chart.require_jet()?;
    Ok((0..chart.n())
        .map(|a| {
            let mut th = AdaptedForm::basis(chart, vec![chart.fiber_index(a)], Expr::one());
            for mu in 0..chart.m() {
                th.add_term(vec![mu], -Expr::var(chart.jet_var(a, mu)));
            }
            th
        })
        .collect())
}
