use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symcore::{parse_with, Expr, SymError};

/// Adapted coordinates (x^μ, y^A) and optionally v^A_μ on a jet chart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartSpec {
    base: Vec<String>,
    fiber: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jet: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<String>,
}

fn suffix(name: &str) -> &str {
    let digits = name
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_digit())
        .last()
        .map(|(i, _)| i);
    match digits {
        Some(i) if i > 0 => &name[i..],
        _ => name,
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(name, "sin" | "cos" | "exp" | "log" | "sqrt")
}

impl ChartSpec {
    pub fn new<S: Into<String>>(
        base: impl IntoIterator<Item = S>,
        fiber: impl IntoIterator<Item = S>,
    ) -> Result<ChartSpec> {
        let chart = ChartSpec {
            base: base.into_iter().map(Into::into).collect(),
            fiber: fiber.into_iter().map(Into::into).collect(),
            jet: None,
            params: Vec::new(),
        };
        chart.validate()?;
        Ok(chart)
    }

    /// Adds jet coordinates named `v<A>_<mu>` from the trailing digits of the
    /// declared names (or the whole name when it has none).
    pub fn with_jet(self) -> Result<ChartSpec> {
        let names = self
            .fiber
            .iter()
            .map(|y| {
                self.base
                    .iter()
                    .map(|x| format!("v{}_{}", suffix(y), suffix(x)))
                    .collect()
            })
            .collect();
        self.with_jet_names(names)
    }

    /// Adds explicitly named jet coordinates, indexed `[A][mu]`.
    pub fn with_jet_names(mut self, names: Vec<Vec<String>>) -> Result<ChartSpec> {
        if names.len() != self.fiber.len() || names.iter().any(|r| r.len() != self.base.len()) {
            return Err(Error::InvalidChart(format!(
                "expected {}x{} jet coordinates",
                self.fiber.len(),
                self.base.len()
            )));
        }
        self.jet = Some(names);
        self.validate()?;
        Ok(self)
    }

    pub fn with_params<S: Into<String>>(mut self, params: impl IntoIterator<Item = S>) -> Result<ChartSpec> {
        self.params = params.into_iter().map(Into::into).collect();
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.base.is_empty() {
            return Err(Error::InvalidChart("at least one base coordinate is required".into()));
        }
        if self.fiber.is_empty() {
            return Err(Error::InvalidChart("at least one fiber coordinate is required".into()));
        }
        let mut seen = HashSet::new();
        for name in self.coords().iter().chain(&self.params) {
            if !valid_name(name) {
                return Err(Error::InvalidChart(format!("invalid name `{name}`")));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::InvalidChart(format!("duplicate name `{name}`")));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.base.len()
    }

    pub fn n(&self) -> usize {
        self.fiber.len()
    }

    pub fn base(&self) -> &[String] {
        &self.base
    }

    pub fn fiber(&self) -> &[String] {
        &self.fiber
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn has_jet(&self) -> bool {
        self.jet.is_some()
    }

    pub fn jet_names(&self) -> Option<&Vec<Vec<String>>> {
        self.jet.as_ref()
    }

    pub fn require_jet(&self) -> Result<()> {
        if self.has_jet() {
            Ok(())
        } else {
            Err(Error::NoJetCoordinates)
        }
    }

    /// Name of v^A_μ. Panics on a chart without jet coordinates.
    pub fn jet_var(&self, a: usize, mu: usize) -> &str {
        &self.jet.as_ref().expect("jet chart")[a][mu]
    }

    /// All coordinates: base, then fiber, then jet (A-major).
    pub fn coords(&self) -> Vec<String> {
        let mut out: Vec<String> = self.base.iter().chain(&self.fiber).cloned().collect();
        if let Some(jet) = &self.jet {
            out.extend(jet.iter().flatten().cloned());
        }
        out
    }

    pub fn dim(&self) -> usize {
        let m = self.m();
        let n = self.n();
        m + n + if self.has_jet() { m * n } else { 0 }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        if let Some(i) = self.base.iter().position(|x| x == name) {
            return Some(i);
        }
        let m = self.m();
        if let Some(i) = self.fiber.iter().position(|x| x == name) {
            return Some(m + i);
        }
        let jet = self.jet.as_ref()?;
        let n = self.n();
        for (a, row) in jet.iter().enumerate() {
            if let Some(mu) = row.iter().position(|x| x == name) {
                return Some(m + n + a * m + mu);
            }
        }
        None
    }

    pub fn base_index(&self, mu: usize) -> usize {
        mu
    }

    pub fn fiber_index(&self, a: usize) -> usize {
        self.m() + a
    }

    pub fn jet_index(&self, a: usize, mu: usize) -> usize {
        self.m() + self.n() + a * self.m() + mu
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.index_of(name).is_some() || self.params.iter().any(|p| p == name)
    }

    pub fn parse(&self, text: &str) -> Result<Expr, SymError> {
        parse_with(text, &|name| self.is_declared(name))
    }

    /// The same chart without jet coordinates.
    pub fn base_chart(&self) -> ChartSpec {
        ChartSpec {
            base: self.base.clone(),
            fiber: self.fiber.clone(),
            jet: None,
            params: self.params.clone(),
        }
    }

    /// Coordinates that may be eliminated when solving constraints, most
    /// preferred first: jet, then fiber, then base, each in reverse order.
    pub fn elimination_order(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(jet) = &self.jet {
            out.extend(jet.iter().flatten().rev().cloned());
        }
        out.extend(self.fiber.iter().rev().cloned());
        out.extend(self.base.iter().rev().cloned());
        out
    }
}
