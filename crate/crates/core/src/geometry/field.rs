use std::sync::Arc;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::ChartSpec;
use crate::error::{Error, Result};
use crate::symcore::{is_zero, Confidence, Expr, Matrix, SimplifyConfig};

/// Vector field on a chart; one component per chart coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: Arc<ChartSpec>,
    comps: Vec<Expr>,
}

pub(crate) fn same_chart(a: &Arc<ChartSpec>, b: &Arc<ChartSpec>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl VectorField {
    pub fn zero(chart: &Arc<ChartSpec>) -> VectorField {
        VectorField {
            chart: chart.clone(),
            comps: vec![Expr::zero(); chart.dim()],
        }
    }

    /// The coordinate field ∂/∂`name`.
    pub fn coordinate(chart: &Arc<ChartSpec>, name: &str) -> Result<VectorField> {
        let i = chart
            .index_of(name)
            .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))?;
        let mut v = VectorField::zero(chart);
        v.comps[i] = Expr::one();
        Ok(v)
    }

    pub fn from_components(chart: &Arc<ChartSpec>, comps: Vec<Expr>) -> Result<VectorField> {
        if comps.len() != chart.dim() {
            return Err(Error::InvalidChart(format!(
                "expected {} components, found {}",
                chart.dim(),
                comps.len()
            )));
        }
        Ok(VectorField {
            chart: chart.clone(),
            comps,
        })
    }

    /// Builds a field from `(coordinate, component)` pairs; missing ones are zero.
    pub fn from_pairs<S: AsRef<str>>(chart: &Arc<ChartSpec>, pairs: &[(S, Expr)]) -> Result<VectorField> {
        let mut v = VectorField::zero(chart);
        for (name, e) in pairs {
            let i = chart
                .index_of(name.as_ref())
                .ok_or_else(|| Error::UnknownCoordinate(name.as_ref().to_string()))?;
            v.comps[i] = &v.comps[i] + e;
        }
        Ok(v)
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    pub fn component_of(&self, name: &str) -> Option<&Expr> {
        self.chart.index_of(name).map(|i| &self.comps[i])
    }

    /// Directional derivative X(f).
    pub fn apply(&self, f: &Expr) -> Expr {
        let coords = self.chart.coords();
        Expr::sum(
            self.comps
                .iter()
                .zip(&coords)
                .filter(|(c, name)| !c.is_exact_zero() && f.contains_var(name))
                .map(|(c, name)| c * f.diff(name)),
        )
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        if !same_chart(&self.chart, &other.chart) {
            return Err(Error::ChartMismatch);
        }
        Ok(VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, k: &Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(|c| c * k).collect(),
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_exact_zero)
    }

    /// Zero verdict over all components, with the weakest confidence used.
    pub fn vanishes(&self, cfg: &SimplifyConfig) -> Result<(bool, Confidence)> {
        let mut conf = Confidence::Exact;
        for c in &self.comps {
            let v = is_zero(c, cfg)?;
            conf = conf.and(v.confidence());
            if !v.is_zero() {
                return Ok((false, conf));
            }
        }
        Ok((true, conf))
    }
}

impl Serialize for VectorField {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(String, String)> = self
            .chart
            .coords()
            .into_iter()
            .zip(&self.comps)
            .filter(|(_, c)| !c.is_exact_zero())
            .map(|(n, c)| (n, c.to_string()))
            .collect();
        let mut st = s.serialize_struct("VectorField", 1)?;
        st.serialize_field("components", &pairs)?;
        st.end()
    }
}

/// Componentwise [X,Y]^a = X(Y^a) − Y(X^a).
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    if !same_chart(&x.chart, &y.chart) {
        return Err(Error::ChartMismatch);
    }
    let comps = x
        .comps
        .iter()
        .zip(&y.comps)
        .map(|(xa, ya)| x.apply(ya) - y.apply(xa))
        .collect();
    Ok(VectorField {
        chart: x.chart.clone(),
        comps,
    })
}

/// Y = scale · Y₁ ∧ … ∧ Y_m.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposableMVF {
    #[serde(skip)]
    chart: Arc<ChartSpec>,
    factors: Vec<VectorField>,
    scale: Expr,
}

impl DecomposableMVF {
    pub fn new(chart: &Arc<ChartSpec>, factors: Vec<VectorField>) -> Result<DecomposableMVF> {
        DecomposableMVF::with_scale(chart, factors, Expr::one())
    }

    pub fn with_scale(chart: &Arc<ChartSpec>, factors: Vec<VectorField>, scale: Expr) -> Result<DecomposableMVF> {
        if factors.len() != chart.m() {
            return Err(Error::FactorCount {
                expected: chart.m(),
                found: factors.len(),
            });
        }
        if factors.iter().any(|f| !same_chart(&f.chart, chart)) {
            return Err(Error::ChartMismatch);
        }
        if scale.is_exact_zero() {
            return Err(Error::InvalidConfig("multivector scale must be nonzero".into()));
        }
        Ok(DecomposableMVF {
            chart: chart.clone(),
            factors,
            scale,
        })
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn factors(&self) -> &[VectorField] {
        &self.factors
    }

    pub fn scale(&self) -> &Expr {
        &self.scale
    }

    /// Checks the Kronecker pattern of base components.
    pub fn check_normalized(&self) -> Result<()> {
        let m = self.chart.m();
        for (mu, f) in self.factors.iter().enumerate() {
            for nu in 0..m {
                let c = f.component(nu);
                let expected = if mu == nu { Expr::one() } else { Expr::zero() };
                if *c != expected {
                    return Err(Error::NotNormalized {
                        factor: mu,
                        coord: self.chart.base()[nu].clone(),
                        value: c.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The factor matrix restricted to the base coordinates, indexed `[μ][ν]`.
    pub fn base_block(&self) -> Matrix {
        let m = self.chart.m();
        Matrix::from_rows(
            self.factors
                .iter()
                .map(|f| (0..m).map(|nu| f.component(nu).clone()).collect())
                .collect(),
        )
    }

    /// Recombines the factors by the inverse base block so that their base
    /// components follow the Kronecker pattern.
    pub fn normalized(&self, cfg: &SimplifyConfig) -> Result<DecomposableMVF> {
        if self.check_normalized().is_ok() {
            return Ok(DecomposableMVF {
                scale: Expr::one(),
                ..self.clone()
            });
        }
        let block = self.base_block();
        let inv = block
            .inverse(cfg)?
            .ok_or_else(|| Error::NotTransverse(block.determinant().to_string()))?;
        let m = self.chart.m();
        let factors = (0..m)
            .map(|mu| {
                let mut acc = VectorField::zero(&self.chart);
                for kappa in 0..m {
                    let c = inv.get(mu, kappa);
                    if !c.is_exact_zero() {
                        acc = acc.add(&self.factors[kappa].scale(c))?;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DecomposableMVF {
            chart: self.chart.clone(),
            factors,
            scale: Expr::one(),
        })
    }
}
