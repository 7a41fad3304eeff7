//! Generalized symmetries and Noether currents.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{same_chart, ChartSpec, VectorField};
use crate::jet::{contact_forms, prolong_section, AdaptedForm, Section};
use crate::lagrangian::{poincare_cartan, Lagrangian};
use crate::symcore::{Confidence, Expr, SimplifyConfig};

/// A vector field X on J¹E together with the (m−1)-form ξ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryCandidate {
    pub x: VectorField,
    pub xi: AdaptedForm,
}

impl SymmetryCandidate {
    pub fn new(x: VectorField, xi: AdaptedForm) -> Result<SymmetryCandidate> {
        let c = x.chart();
        c.require_jet()?;
        if !same_chart(c, xi.chart()) {
            return Err(Error::ChartMismatch);
        }
        let want = c.m() - 1;
        if xi.degree() != want && !xi.is_exact_zero() {
            return Err(Error::DegreeMismatch {
                expected: want,
                found: xi.degree(),
            });
        }
        let xi = if xi.degree() == want {
            xi
        } else {
            AdaptedForm::zero(c, want)
        };
        Ok(SymmetryCandidate { x, xi })
    }

    /// Candidate with ξ = 0.
    pub fn without_xi(x: VectorField) -> Result<SymmetryCandidate> {
        let xi = AdaptedForm::zero(x.chart(), x.chart().m() - 1);
        SymmetryCandidate::new(x, xi)
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        self.x.chart()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactReport {
    pub preserved: bool,
    /// Part of L(X)θ^A outside the span of the contact forms, one per A.
    pub residuals: Vec<AdaptedForm>,
    pub confidence: Confidence,
}

/// Tests L(X)θ^A ∈ span{θ^B}. The dy-components of L(X)θ^A fix the
/// combination; what is left after removing it is the residual.
pub fn preserves_contact_module(x: &VectorField, cfg: &SimplifyConfig) -> Result<ContactReport> {
    let mut preserved = true;
    let mut conf = Confidence::Exact;
    let mut residuals = Vec::new();
    for th in contact_forms(x.chart())? {
        let r = th.lie_derivative(x)?.contact_reduce()?;
        let (z, cz) = r.vanishes(cfg)?;
        conf = conf.and(cz);
        preserved &= z;
        residuals.push(r);
    }
    Ok(ContactReport {
        preserved,
        residuals,
        confidence: conf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryDefect {
    /// L(X)(£ d^m x) − dξ modulo the contact ideal.
    pub defect: AdaptedForm,
    pub vanishes: bool,
    pub confidence: Confidence,
}

pub fn symmetry_defect(l: &Lagrangian, cand: &SymmetryCandidate, cfg: &SimplifyConfig) -> Result<SymmetryDefect> {
    let c = l.chart();
    if !same_chart(c, cand.chart()) {
        return Err(Error::ChartMismatch);
    }
    let density = AdaptedForm::volume(c).scale(l.density());
    let alpha = density.lie_derivative(&cand.x)?.sub(&cand.xi.d())?;
    let defect = alpha.contact_reduce()?;
    let (vanishes, confidence) = defect.vanishes(cfg)?;
    Ok(SymmetryDefect {
        defect,
        vanishes,
        confidence,
    })
}

/// Whether [`conserved_current`] insists on a vanishing defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefectCheck {
    #[default]
    Require,
    /// Build the current even though the defect does not vanish.
    Acknowledge,
}

/// The (m−1)-form ξ − i(X)Θ_L with the data it was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservedCurrent {
    pub current: AdaptedForm,
    pub density: Expr,
    pub candidate: SymmetryCandidate,
    pub defect: SymmetryDefect,
}

pub fn conserved_current(
    l: &Lagrangian,
    cand: &SymmetryCandidate,
    check: DefectCheck,
    cfg: &SimplifyConfig,
) -> Result<ConservedCurrent> {
    let defect = symmetry_defect(l, cand, cfg)?;
    if !defect.vanishes && check == DefectCheck::Require {
        return Err(Error::NonzeroDefect(defect.defect.to_string()));
    }
    let theta = poincare_cartan(l, cfg)?.theta_l;
    let current = cand.xi.sub(&theta.interior(&cand.x)?)?;
    Ok(ConservedCurrent {
        current,
        density: l.density().clone(),
        candidate: cand.clone(),
        defect,
    })
}

/// Coefficient of d^m x in d((j¹φ)* current).
pub fn current_closed_on_section(c: &ConservedCurrent, phi: &Section) -> Result<Expr> {
    let chart = c.current.chart();
    if !same_chart(chart, phi.chart()) {
        return Err(Error::ChartMismatch);
    }
    let psi = prolong_section(phi)?;
    let pulled = c.current.pullback(&psi.bindings())?.d();
    let vol: Vec<usize> = (0..chart.m()).collect();
    Ok(pulled.coefficient_at(&vol))
}
