//! Floating-point m-flows, commutation checks and finite-difference residuals.

mod residual;
mod section;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChartSpec, DecomposableMVF};
use crate::symcore::{CompiledExpr, Expr, SimplifyConfig};

pub use residual::{numeric_residual, ResidualTarget};
pub use section::{BaseGrid, NumericSection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub h: f64,
    /// 2 (Heun) or 4 (classical Runge–Kutta).
    pub order: u8,
    pub commutation_tolerance: f64,
    /// Bound for finite-difference residuals and for constraint values at the initial point.
    pub residual_tolerance: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            h: 1e-3,
            order: 4,
            commutation_tolerance: 1e-6,
            residual_tolerance: 1e-6,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.h
            )));
        }
        if self.order != 2 && self.order != 4 {
            return Err(Error::InvalidConfig(format!(
                "integrator order must be 2 or 4, got {}",
                self.order
            )));
        }
        for (name, t) in [
            ("commutation tolerance", self.commutation_tolerance),
            ("residual tolerance", self.residual_tolerance),
        ] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

const BLOW_UP: f64 = 1e12;

pub(crate) fn compile(chart: &ChartSpec, e: &Expr) -> Result<CompiledExpr> {
    CompiledExpr::compile(e, &chart.coords())
        .map_err(|u| Error::InvalidConfig(format!("`{}` has no numeric value", u.0)))
}

/// Compiled factors of a normalized multivector field.
pub(crate) struct CompiledFlow {
    factors: Vec<Vec<CompiledExpr>>,
    order: u8,
    h: f64,
}

impl CompiledFlow {
    pub(crate) fn new(y: &DecomposableMVF, cfg: &FlowConfig) -> Result<CompiledFlow> {
        cfg.validate()?;
        let y = y.normalized(&SimplifyConfig::default())?;
        let c = y.chart();
        let factors = y
            .factors()
            .iter()
            .map(|f| f.components().iter().map(|e| compile(c, e)).collect())
            .collect::<Result<_>>()?;
        Ok(CompiledFlow {
            factors,
            order: cfg.order,
            h: cfg.h,
        })
    }

    fn rhs(&self, mu: usize, p: &[f64], out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.factors[mu]) {
            *o = f.eval(p);
        }
    }

    /// τ^μ_t(p) with fixed steps and compensated accumulation.
    pub(crate) fn flow(&self, mu: usize, t: f64, p: &mut [f64]) -> Result<()> {
        if t == 0.0 {
            return Ok(());
        }
        let d = p.len();
        let steps = ((t.abs() / self.h) - 1e-9).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let mut comp = vec![0.0; d];
        let mut k = vec![vec![0.0; d]; 4];
        let mut tmp = vec![0.0; d];
        for _ in 0..steps {
            let incr: Vec<f64> = if self.order == 4 {
                self.rhs(mu, p, &mut k[0]);
                for i in 0..d {
                    tmp[i] = p[i] + 0.5 * dt * k[0][i];
                }
                self.rhs(mu, &tmp, &mut k[1]);
                for i in 0..d {
                    tmp[i] = p[i] + 0.5 * dt * k[1][i];
                }
                self.rhs(mu, &tmp, &mut k[2]);
                for i in 0..d {
                    tmp[i] = p[i] + dt * k[2][i];
                }
                self.rhs(mu, &tmp, &mut k[3]);
                (0..d)
                    .map(|i| dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
                    .collect()
            } else {
                self.rhs(mu, p, &mut k[0]);
                for i in 0..d {
                    tmp[i] = p[i] + dt * k[0][i];
                }
                self.rhs(mu, &tmp, &mut k[1]);
                (0..d).map(|i| 0.5 * dt * (k[0][i] + k[1][i])).collect()
            };
            for i in 0..d {
                let y = incr[i] - comp[i];
                let s = p[i] + y;
                comp[i] = (s - p[i]) - y;
                p[i] = s;
            }
            if let Some(i) = (0..d).find(|&i| !p[i].is_finite() || p[i].abs() > BLOW_UP) {
                return Err(Error::StepRejected(format!("coordinate {i} reached {}", p[i])));
            }
        }
        Ok(())
    }

    /// τ¹_{t₁} ∘ … ∘ τᵐ_{t_m}(p): the last factor acts first.
    pub(crate) fn m_flow(&self, times: &[f64], p: &mut [f64]) -> Result<()> {
        for mu in (0..self.factors.len()).rev() {
            self.flow(mu, times[mu], p)?;
        }
        Ok(())
    }
}

fn check_point(chart: &ChartSpec, p0: &[f64]) -> Result<()> {
    if p0.len() != chart.dim() {
        return Err(Error::InvalidConfig(format!(
            "initial point has {} coordinates, chart has {}",
            p0.len(),
            chart.dim()
        )));
    }
    Ok(())
}

/// Fills `grid` with the integral section through `p0`. `constraints` are the
/// final constraints of the branch containing `p0` (empty when the field is
/// integrable everywhere); each must vanish at `p0` within the residual tolerance.
pub fn integrate_m_flow(
    y: &DecomposableMVF,
    constraints: &[Expr],
    p0: &[f64],
    grid: &BaseGrid,
    cfg: &FlowConfig,
) -> Result<NumericSection> {
    let chart: &Arc<ChartSpec> = y.chart();
    check_point(chart, p0)?;
    if grid.axes().len() != chart.m() {
        return Err(Error::InvalidConfig(format!(
            "grid has {} axes, base has {}",
            grid.axes().len(),
            chart.m()
        )));
    }
    for k in constraints {
        let value = compile(chart, k)?.eval(p0);
        if value.is_nan() || value.abs() > cfg.residual_tolerance {
            return Err(Error::ConstraintViolation {
                constraint: k.to_string(),
                value,
            });
        }
    }
    let flow = CompiledFlow::new(y, cfg)?;
    let m = chart.m();
    let nodes = grid.nodes();
    let values = nodes
        .par_iter()
        .map(|x| {
            let times: Vec<f64> = (0..m).map(|mu| x[mu] - p0[mu]).collect();
            let mut p = p0.to_vec();
            flow.m_flow(&times, &mut p)?;
            Ok(p[m..].to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    NumericSection::new(chart, grid.clone(), values)
}

/// max over pairs μ < ν of |τ^μ_t∘τ^ν_s(p0) − τ^ν_s∘τ^μ_t(p0)|.
pub fn check_flow_commutation(y: &DecomposableMVF, p0: &[f64], t: f64, s: f64, cfg: &FlowConfig) -> Result<f64> {
    check_point(y.chart(), p0)?;
    let flow = CompiledFlow::new(y, cfg)?;
    let m = y.chart().m();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|mu| (mu + 1..m).map(move |nu| (mu, nu))).collect();
    let devs = pairs
        .par_iter()
        .map(|&(mu, nu)| {
            let mut a = p0.to_vec();
            flow.flow(nu, s, &mut a)?;
            flow.flow(mu, t, &mut a)?;
            let mut b = p0.to_vec();
            flow.flow(mu, t, &mut b)?;
            flow.flow(nu, s, &mut b)?;
            Ok(a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}
