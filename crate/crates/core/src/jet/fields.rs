use std::sync::Arc;

use serde::Serialize;

use super::forms::contact_forms;
use crate::error::{Error, Result};
use crate::geometry::{transversality_check, ChartSpec, DecomposableMVF, VectorField};
use crate::symcore::{is_zero, Confidence, Expr, SimplifyConfig};

/// Rejects expressions that use a name outside `allowed`.
fn check_vars(e: &Expr, chart: &ChartSpec, allowed: &[String]) -> Result<()> {
    for v in e.free_vars() {
        if !allowed.contains(&v) && !chart.params().contains(&v) {
            return Err(Error::UnknownCoordinate(v));
        }
    }
    Ok(())
}

fn vanish_all<'a>(
    items: impl IntoIterator<Item = &'a Expr>,
    cfg: &SimplifyConfig,
) -> Result<(bool, Confidence, Option<Expr>)> {
    let mut conf = Confidence::Exact;
    for e in items {
        if e.is_exact_zero() {
            continue;
        }
        let v = is_zero(e, cfg)?;
        conf = conf.and(v.confidence());
        if !v.is_zero() {
            return Ok((false, conf, Some(e.clone())));
        }
    }
    Ok((true, conf, None))
}

/// Connection on E → M with coefficients Γ^A_μ(x, y), indexed `[A][μ]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionE {
    #[serde(skip)]
    chart: Arc<ChartSpec>,
    gamma: Vec<Vec<Expr>>,
}

impl ConnectionE {
    pub fn new(chart: &Arc<ChartSpec>, gamma: Vec<Vec<Expr>>) -> Result<ConnectionE> {
        let (m, n) = (chart.m(), chart.n());
        if gamma.len() != n || gamma.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidChart(format!("expected {n}x{m} connection coefficients")));
        }
        let allowed: Vec<String> = chart.base().iter().chain(chart.fiber()).cloned().collect();
        for e in gamma.iter().flatten() {
            check_vars(e, chart, &allowed)?;
        }
        Ok(ConnectionE {
            chart: chart.clone(),
            gamma,
        })
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn gamma(&self) -> &[Vec<Expr>] {
        &self.gamma
    }

    /// Horizontal lift ∂/∂x^μ + Γ^A_μ ∂/∂y^A.
    pub fn horizontal(&self, mu: usize) -> VectorField {
        let mut comps = vec![Expr::zero(); self.chart.dim()];
        comps[mu] = Expr::one();
        for (a, row) in self.gamma.iter().enumerate() {
            comps[self.chart.fiber_index(a)] = row[mu].clone();
        }
        VectorField::from_components(&self.chart, comps).expect("component count")
    }

    /// The representative ∧_μ (∂/∂x^μ + Γ^A_μ ∂/∂y^A).
    pub fn to_mvf(&self) -> DecomposableMVF {
        let factors = (0..self.chart.m()).map(|mu| self.horizontal(mu)).collect();
        DecomposableMVF::new(&self.chart, factors).expect("factor count")
    }
}

/// 𝓡^B_{μη} indexed `[B][μ][η]`.
pub fn curvature_e(c: &ConnectionE) -> Vec<Vec<Vec<Expr>>> {
    let chart = &c.chart;
    let (m, n) = (chart.m(), chart.n());
    let h: Vec<VectorField> = (0..m).map(|mu| c.horizontal(mu)).collect();
    let mut out = vec![vec![vec![Expr::zero(); m]; m]; n];
    for b in 0..n {
        for mu in 0..m {
            for eta in mu + 1..m {
                let r = h[mu].apply(&c.gamma[b][eta]) - h[eta].apply(&c.gamma[b][mu]);
                out[b][eta][mu] = -&r;
                out[b][mu][eta] = r;
            }
        }
    }
    out
}

/// Jet field on J¹E with F^A_μ indexed `[A][μ]` and G^A_{μρ} indexed
/// `[A][μ][ρ]`, the component of X_μ along ∂/∂v^A_ρ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JetFieldJ1 {
    #[serde(skip)]
    chart: Arc<ChartSpec>,
    f: Vec<Vec<Expr>>,
    g: Vec<Vec<Vec<Expr>>>,
}

impl JetFieldJ1 {
    pub fn new(chart: &Arc<ChartSpec>, f: Vec<Vec<Expr>>, g: Vec<Vec<Vec<Expr>>>) -> Result<JetFieldJ1> {
        chart.require_jet()?;
        let (m, n) = (chart.m(), chart.n());
        if f.len() != n || f.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidChart(format!("expected {n}x{m} F coefficients")));
        }
        if g.len() != n || g.iter().any(|r| r.len() != m || r.iter().any(|c| c.len() != m)) {
            return Err(Error::InvalidChart(format!("expected {n}x{m}x{m} G coefficients")));
        }
        let allowed = chart.coords();
        for e in f.iter().flatten().chain(g.iter().flatten().flatten()) {
            check_vars(e, chart, &allowed)?;
        }
        Ok(JetFieldJ1 {
            chart: chart.clone(),
            f,
            g,
        })
    }

    /// The SOPDE with F = v and the given G.
    pub fn sopde(chart: &Arc<ChartSpec>, g: Vec<Vec<Vec<Expr>>>) -> Result<JetFieldJ1> {
        chart.require_jet()?;
        let f = (0..chart.n())
            .map(|a| (0..chart.m()).map(|mu| Expr::var(chart.jet_var(a, mu))).collect())
            .collect();
        JetFieldJ1::new(chart, f, g)
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn f(&self) -> &[Vec<Expr>] {
        &self.f
    }

    pub fn g(&self) -> &[Vec<Vec<Expr>>] {
        &self.g
    }

    /// X_μ = ∂/∂x^μ + F^A_μ ∂/∂y^A + G^A_{μρ} ∂/∂v^A_ρ.
    pub fn factor(&self, mu: usize) -> VectorField {
        let c = &self.chart;
        let mut comps = vec![Expr::zero(); c.dim()];
        comps[mu] = Expr::one();
        for a in 0..c.n() {
            comps[c.fiber_index(a)] = self.f[a][mu].clone();
            for rho in 0..c.m() {
                comps[c.jet_index(a, rho)] = self.g[a][mu][rho].clone();
            }
        }
        VectorField::from_components(c, comps).expect("component count")
    }

    /// F − v, indexed `[A][μ]`.
    pub fn sopde_residual(&self) -> Vec<Vec<Expr>> {
        let c = &self.chart;
        (0..c.n())
            .map(|a| {
                (0..c.m())
                    .map(|mu| &self.f[a][mu] - Expr::var(c.jet_var(a, mu)))
                    .collect()
            })
            .collect()
    }

    pub fn is_sopde(&self, cfg: &SimplifyConfig) -> Result<bool> {
        Ok(vanish_all(self.sopde_residual().iter().flatten(), cfg)?.0)
    }
}

/// The dy^B- and dv^B_ρ-valued parts of the curvature of a jet field,
/// indexed `[B][μ][η]` and `[B][ρ][μ][η]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureJ1 {
    pub y_block: Vec<Vec<Vec<Expr>>>,
    pub v_block: Vec<Vec<Vec<Vec<Expr>>>>,
}

impl CurvatureJ1 {
    pub fn entries(&self) -> impl Iterator<Item = &Expr> {
        self.y_block
            .iter()
            .flatten()
            .flatten()
            .chain(self.v_block.iter().flatten().flatten().flatten())
    }

    pub fn vanishes(&self, cfg: &SimplifyConfig) -> Result<(bool, Confidence)> {
        let (z, c, _) = vanish_all(self.entries(), cfg)?;
        Ok((z, c))
    }
}

pub fn curvature_j1(j: &JetFieldJ1) -> CurvatureJ1 {
    let c = &j.chart;
    let (m, n) = (c.m(), c.n());
    let x: Vec<VectorField> = (0..m).map(|mu| j.factor(mu)).collect();
    let mut y_block = vec![vec![vec![Expr::zero(); m]; m]; n];
    let mut v_block = vec![vec![vec![vec![Expr::zero(); m]; m]; m]; n];
    for b in 0..n {
        for mu in 0..m {
            for eta in mu + 1..m {
                let r = x[mu].apply(&j.f[b][eta]) - x[eta].apply(&j.f[b][mu]);
                y_block[b][eta][mu] = -&r;
                y_block[b][mu][eta] = r;
                for rho in 0..m {
                    let r = x[mu].apply(&j.g[b][eta][rho]) - x[eta].apply(&j.g[b][mu][rho]);
                    v_block[b][rho][eta][mu] = -&r;
                    v_block[b][rho][mu][eta] = r;
                }
            }
        }
    }
    CurvatureJ1 { y_block, v_block }
}

pub fn jetfield_to_mvf(j: &JetFieldJ1) -> DecomposableMVF {
    let factors = (0..j.chart.m()).map(|mu| j.factor(mu)).collect();
    DecomposableMVF::new(&j.chart, factors).expect("factor count")
}

/// Normalizes the base block to the identity and reads off (F, G).
pub fn mvf_to_jetfield(y: &DecomposableMVF, cfg: &SimplifyConfig) -> Result<JetFieldJ1> {
    let c = y.chart();
    c.require_jet()?;
    let t = transversality_check(y, cfg)?;
    if !t.transverse {
        return Err(Error::NotTransverse(t.determinant.to_string()));
    }
    let x = y.normalized(cfg)?;
    let (m, n) = (c.m(), c.n());
    let fs = x.factors();
    let f = (0..n)
        .map(|a| (0..m).map(|mu| fs[mu].component(c.fiber_index(a)).clone()).collect())
        .collect();
    let g = (0..n)
        .map(|a| {
            (0..m)
                .map(|mu| {
                    (0..m)
                        .map(|rho| fs[mu].component(c.jet_index(a, rho)).clone())
                        .collect()
                })
                .collect()
        })
        .collect();
    JetFieldJ1::new(c, f, g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SopdeReport {
    pub via_f: bool,
    pub via_theta: bool,
    /// First nonvanishing F^A_μ − v^A_μ after normalization.
    pub witness: Option<Expr>,
    pub confidence: Confidence,
}

/// Tests the SOPDE condition twice: F = v after normalization, and
/// θ^A(Y_μ) = 0 on the factors as given.
pub fn sopde_check(y: &DecomposableMVF, cfg: &SimplifyConfig) -> Result<SopdeReport> {
    let j = mvf_to_jetfield(y, cfg)?;
    let (via_f, c1, witness) = vanish_all(j.sopde_residual().iter().flatten(), cfg)?;
    let thetas = contact_forms(y.chart())?;
    let mut contractions = Vec::new();
    for th in &thetas {
        for factor in y.factors() {
            contractions.push(th.interior(factor)?.coefficient_at(&[]));
        }
    }
    let (via_theta, c2, _) = vanish_all(&contractions, cfg)?;
    Ok(SopdeReport {
        via_f,
        via_theta,
        witness,
        confidence: c1.and(c2),
    })
}

/// The relations G^B_{μη} − G^B_{ημ}, indexed `[B][μ][η]`, and the PDE
/// expressions X_μ(G^B_{ηρ}) − X_η(G^B_{μρ}), indexed `[B][ρ][μ][η]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SopdeConditions {
    pub symmetry: Vec<Vec<Vec<Expr>>>,
    pub pde: Vec<Vec<Vec<Vec<Expr>>>>,
}

impl SopdeConditions {
    pub fn entries(&self) -> impl Iterator<Item = &Expr> {
        self.symmetry
            .iter()
            .flatten()
            .flatten()
            .chain(self.pde.iter().flatten().flatten().flatten())
    }

    /// Independent symmetry relations as `(B, μ, η, value)` with μ < η.
    pub fn symmetry_relations(&self) -> Vec<(usize, usize, usize, Expr)> {
        let mut out = Vec::new();
        for (b, t) in self.symmetry.iter().enumerate() {
            for (mu, row) in t.iter().enumerate() {
                for (eta, e) in row.iter().enumerate().skip(mu + 1) {
                    out.push((b, mu, eta, e.clone()));
                }
            }
        }
        out
    }

    /// Independent PDE expressions as `(B, ρ, μ, η, value)` with μ < η.
    pub fn pde_relations(&self) -> Vec<(usize, usize, usize, usize, Expr)> {
        let mut out = Vec::new();
        for (b, t) in self.pde.iter().enumerate() {
            for (rho, block) in t.iter().enumerate() {
                for (mu, row) in block.iter().enumerate() {
                    for (eta, e) in row.iter().enumerate().skip(mu + 1) {
                        out.push((b, rho, mu, eta, e.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn vanishes(&self, cfg: &SimplifyConfig) -> Result<(bool, Confidence)> {
        let (z, c, _) = vanish_all(self.entries(), cfg)?;
        Ok((z, c))
    }
}

pub fn sopde_integrability_conditions(j: &JetFieldJ1, cfg: &SimplifyConfig) -> Result<SopdeConditions> {
    let res = j.sopde_residual();
    for (a, row) in res.iter().enumerate() {
        for (mu, r) in row.iter().enumerate() {
            if !r.is_exact_zero() && !is_zero(r, cfg)?.is_zero() {
                return Err(Error::NotSopde {
                    a,
                    mu,
                    residual: r.to_string(),
                });
            }
        }
    }
    let sopde = JetFieldJ1::sopde(&j.chart, j.g.clone())?;
    let curv = curvature_j1(&sopde);
    Ok(SopdeConditions {
        symmetry: curv.y_block,
        pde: curv.v_block,
    })
}
