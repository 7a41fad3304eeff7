use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use super::fields::{ConnectionE, JetFieldJ1};
use super::forms::contact_forms;
use crate::error::{Error, Result};
use crate::geometry::{ChartSpec, VectorField};
use crate::symcore::{is_zero, Expr, SimplifyConfig};

fn check_base_only(chart: &ChartSpec, e: &Expr) -> Result<()> {
    for v in e.free_vars() {
        if !chart.base().contains(&v) && !chart.params().contains(&v) {
            return Err(Error::InvalidChart(format!(
                "section entry `{e}` depends on non-base coordinate `{v}`"
            )));
        }
    }
    Ok(())
}

/// Local section x ↦ (x, f^A(x)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    #[serde(skip)]
    chart: Arc<ChartSpec>,
    f: Vec<Expr>,
}

impl Section {
    pub fn new(chart: &Arc<ChartSpec>, f: Vec<Expr>) -> Result<Section> {
        if f.len() != chart.n() {
            return Err(Error::InvalidChart(format!(
                "expected {} section components, found {}",
                chart.n(),
                f.len()
            )));
        }
        for e in &f {
            check_base_only(chart, e)?;
        }
        Ok(Section {
            chart: chart.clone(),
            f,
        })
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn f(&self) -> &[Expr] {
        &self.f
    }

    /// Bindings y^A ↦ f^A.
    pub fn bindings(&self) -> HashMap<String, Expr> {
        self.chart.fiber().iter().cloned().zip(self.f.iter().cloned()).collect()
    }
}

/// Local section x ↦ (x, f^A(x), g^A_μ(x)) of J¹E → M.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JetSection {
    #[serde(skip)]
    chart: Arc<ChartSpec>,
    f: Vec<Expr>,
    g: Vec<Vec<Expr>>,
}

impl JetSection {
    pub fn new(chart: &Arc<ChartSpec>, f: Vec<Expr>, g: Vec<Vec<Expr>>) -> Result<JetSection> {
        chart.require_jet()?;
        let (m, n) = (chart.m(), chart.n());
        if f.len() != n || g.len() != n || g.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidChart(format!(
                "expected {n} values and {n}x{m} derivatives"
            )));
        }
        for e in f.iter().chain(g.iter().flatten()) {
            check_base_only(chart, e)?;
        }
        Ok(JetSection {
            chart: chart.clone(),
            f,
            g,
        })
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn f(&self) -> &[Expr] {
        &self.f
    }

    pub fn g(&self) -> &[Vec<Expr>] {
        &self.g
    }

    /// Bindings y^A ↦ f^A and v^A_μ ↦ g^A_μ.
    pub fn bindings(&self) -> HashMap<String, Expr> {
        let c = &self.chart;
        let mut out: HashMap<String, Expr> = c.fiber().iter().cloned().zip(self.f.iter().cloned()).collect();
        for a in 0..c.n() {
            for mu in 0..c.m() {
                out.insert(c.jet_var(a, mu).to_string(), self.g[a][mu].clone());
            }
        }
        out
    }

    /// Composes a function on J¹E with the section.
    pub fn pull(&self, e: &Expr) -> Result<Expr> {
        Ok(e.subs(&self.bindings())?)
    }
}

/// j¹φ = (x, f, ∂f/∂x).
pub fn prolong_section(phi: &Section) -> Result<JetSection> {
    let c = &phi.chart;
    let g = phi
        .f
        .iter()
        .map(|f| c.base().iter().map(|x| f.diff(x)).collect())
        .collect();
    JetSection::new(c, phi.f.clone(), g)
}

/// True iff g^A_μ = ∂f^A/∂x^μ, checked directly and through ψ*θ^A = 0.
pub fn holonomy_check(psi: &JetSection, cfg: &SimplifyConfig) -> Result<bool> {
    let c = &psi.chart;
    let mut direct = true;
    for (a, f) in psi.f.iter().enumerate() {
        for (mu, x) in c.base().iter().enumerate() {
            let r = f.diff(x) - &psi.g[a][mu];
            if !r.is_exact_zero() && !is_zero(&r, cfg)?.is_zero() {
                direct = false;
            }
        }
    }
    let bindings = psi.bindings();
    let mut via_forms = true;
    for th in contact_forms(c)? {
        let (z, _) = th.pullback(&bindings)?.vanishes(cfg)?;
        via_forms &= z;
    }
    debug_assert_eq!(direct, via_forms);
    Ok(direct && via_forms)
}

/// Residuals of the integral-section system of a jet field, indexed
/// `[A][μ]` for ∂f^A/∂x^μ − F^A_μ∘ψ and `[A][ρ][μ]` for
/// ∂g^A_ρ/∂x^μ − G^A_{μρ}∘ψ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionResidual {
    pub f: Vec<Vec<Expr>>,
    pub g: Vec<Vec<Vec<Expr>>>,
}

impl SectionResidual {
    pub fn entries(&self) -> impl Iterator<Item = &Expr> {
        self.f.iter().flatten().chain(self.g.iter().flatten().flatten())
    }

    pub fn is_exact_zero(&self) -> bool {
        self.entries().all(Expr::is_exact_zero)
    }
}

pub fn integral_section_residual(j: &JetFieldJ1, psi: &JetSection) -> Result<SectionResidual> {
    let c = j.chart();
    let base = c.base();
    let b = psi.bindings();
    let (m, n) = (c.m(), c.n());
    let mut f = vec![vec![Expr::zero(); m]; n];
    let mut g = vec![vec![vec![Expr::zero(); m]; m]; n];
    for a in 0..n {
        for mu in 0..m {
            f[a][mu] = psi.f[a].diff(&base[mu]) - j.f()[a][mu].subs(&b)?;
            for rho in 0..m {
                g[a][rho][mu] = psi.g[a][rho].diff(&base[mu]) - j.g()[a][mu][rho].subs(&b)?;
            }
        }
    }
    Ok(SectionResidual { f, g })
}

/// ∂f^A/∂x^μ − Γ^A_μ∘φ, indexed `[A][μ]`.
pub fn connection_section_residual(c: &ConnectionE, phi: &Section) -> Result<Vec<Vec<Expr>>> {
    let base = c.chart().base();
    let b = phi.bindings();
    phi.f
        .iter()
        .zip(c.gamma())
        .map(|(f, row)| {
            base.iter()
                .zip(row)
                .map(|(x, gam)| Ok(f.diff(x) - gam.subs(&b)?))
                .collect()
        })
        .collect()
}

/// Canonical lift to J¹E of a field ξ^ν ∂/∂x^ν + η^A ∂/∂y^A on E:
/// ζ^A_μ = D_μ η^A − v^A_ν D_μ ξ^ν with D_μ = ∂/∂x^μ + v^B_μ ∂/∂y^B.
pub fn prolong_vector_field(z: &VectorField) -> Result<VectorField> {
    let c = z.chart();
    c.require_jet()?;
    let (m, n) = (c.m(), c.n());
    let jets: Vec<String> = c.jet_names().into_iter().flatten().flatten().cloned().collect();
    for i in 0..m + n {
        if let Some(v) = jets.iter().find(|v| z.component(i).contains_var(v)) {
            return Err(Error::InvalidChart(format!(
                "field to prolong depends on jet coordinate `{v}`"
            )));
        }
    }
    if (m + n..c.dim()).any(|i| !z.component(i).is_exact_zero()) {
        return Err(Error::InvalidChart("field to prolong has jet components".into()));
    }
    let total = |mu: usize, e: &Expr| {
        let mut acc = e.diff(&c.base()[mu]);
        for b in 0..n {
            let y = &c.fiber()[b];
            if e.contains_var(y) {
                acc = acc + Expr::var(c.jet_var(b, mu)) * e.diff(y);
            }
        }
        acc
    };
    let mut comps = z.components().to_vec();
    for a in 0..n {
        for mu in 0..m {
            let mut zeta = total(mu, z.component(c.fiber_index(a)));
            for nu in 0..m {
                let d = total(mu, z.component(nu));
                if !d.is_exact_zero() {
                    zeta = zeta - Expr::var(c.jet_var(a, nu)) * d;
                }
            }
            comps[c.jet_index(a, mu)] = zeta;
        }
    }
    VectorField::from_components(c, comps)
}
