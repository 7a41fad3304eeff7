use rayon::prelude::*;

use super::{compile, FlowConfig, NumericSection};
use crate::error::{Error, Result};
use crate::jet::JetFieldJ1;
use crate::lagrangian::Lagrangian;
use crate::symcore::{is_zero, CompiledExpr, SimplifyConfig};

/// What a numeric section is checked against.
#[derive(Debug, Clone, Copy)]
pub enum ResidualTarget<'a> {
    /// Euler–Lagrange equations of the density.
    Lagrangian(&'a Lagrangian),
    /// Integral-section equations of the jet field.
    JetField(&'a JetFieldJ1),
}

/// Three-point weights at node `i` for the first and second derivative.
fn weights(axis: &[f64], i: usize) -> ([f64; 3], [f64; 3]) {
    let h1 = axis[i] - axis[i - 1];
    let h2 = axis[i + 1] - axis[i];
    let s = h1 + h2;
    (
        [-h2 / (h1 * s), (h2 - h1) / (h1 * h2), h1 / (h2 * s)],
        [2.0 / (h1 * s), -2.0 / (h1 * h2), 2.0 / (h2 * s)],
    )
}

struct Stencil<'s> {
    sec: &'s NumericSection,
}

impl Stencil<'_> {
    fn at(&self, col: usize, idx: &[usize]) -> f64 {
        self.sec.values()[self.sec.grid().flat(idx)][col]
    }

    /// Σ w_k f_k written as w₀(f₀ − f₁) + w₂(f₂ − f₁), exact on constants.
    fn along(&self, col: usize, idx: &[usize], mu: usize, w: &[f64; 3]) -> f64 {
        let mut j = idx.to_vec();
        let mid = self.at(col, &j);
        j[mu] = idx[mu] - 1;
        let lo = self.at(col, &j);
        j[mu] = idx[mu] + 1;
        let hi = self.at(col, &j);
        w[0] * (lo - mid) + w[2] * (hi - mid)
    }

    fn d1(&self, col: usize, idx: &[usize], mu: usize) -> f64 {
        let (w, _) = weights(&self.sec.grid().axes()[mu], idx[mu]);
        self.along(col, idx, mu, &w)
    }

    fn d2(&self, col: usize, idx: &[usize], mu: usize, nu: usize) -> f64 {
        let axes = self.sec.grid().axes();
        if mu == nu {
            let (_, w) = weights(&axes[mu], idx[mu]);
            return self.along(col, idx, mu, &w);
        }
        let (wm, _) = weights(&axes[mu], idx[mu]);
        let (wn, _) = weights(&axes[nu], idx[nu]);
        let mid = self.along(col, idx, nu, &wn);
        let mut j = idx.to_vec();
        j[mu] = idx[mu] - 1;
        let lo = self.along(col, &j, nu, &wn);
        j[mu] = idx[mu] + 1;
        let hi = self.along(col, &j, nu, &wn);
        wm[0] * (lo - mid) + wm[2] * (hi - mid)
    }
}

fn column(sec: &NumericSection, name: &str) -> Result<usize> {
    sec.names()
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::InvalidConfig(format!("section has no values for `{name}`")))
}

fn max_abs(values: Vec<f64>) -> f64 {
    values.into_iter().fold(0.0, |acc: f64, r| {
        if r.is_nan() || acc.is_nan() {
            f64::NAN
        } else {
            acc.max(r.abs())
        }
    })
}

/// Largest absolute central-difference residual over the interior nodes.
pub fn numeric_residual(target: ResidualTarget<'_>, sec: &NumericSection, cfg: &FlowConfig) -> Result<f64> {
    cfg.validate()?;
    let chart = match target {
        ResidualTarget::Lagrangian(l) => l.chart().clone(),
        ResidualTarget::JetField(j) => j.chart().clone(),
    };
    if sec.base() != chart.base() {
        return Err(Error::ChartMismatch);
    }
    let shape = sec.grid().shape();
    if let Some(i) = shape.iter().position(|&s| s < 3) {
        return Err(Error::GridTooSmall(format!(
            "axis `{}` has {} nodes, the stencil needs 3",
            chart.base()[i],
            shape[i]
        )));
    }
    let (m, n) = (chart.m(), chart.n());
    let dim = chart.dim();
    let fcols = chart
        .fiber()
        .iter()
        .map(|y| column(sec, y))
        .collect::<Result<Vec<_>>>()?;
    let interior: Vec<Vec<usize>> = (0..sec.grid().len())
        .map(|k| sec.grid().multi(k))
        .filter(|idx| idx.iter().zip(&shape).all(|(&i, &s)| i > 0 && i + 1 < s))
        .collect();
    let st = Stencil { sec };
    // Chart point (x, f, ∂f) at an interior node.
    let point = |idx: &[usize]| {
        let mut p = vec![0.0; dim];
        p[..m].copy_from_slice(&sec.grid().point(idx));
        for a in 0..n {
            p[m + a] = st.at(fcols[a], idx);
            if chart.has_jet() {
                for mu in 0..m {
                    p[chart.jet_index(a, mu)] = st.d1(fcols[a], idx, mu);
                }
            }
        }
        p
    };

    let residuals = match target {
        ResidualTarget::Lagrangian(l) => {
            let mut force = Vec::new();
            // dp[a][mu] = (∂_x^mu p, [∂_y^b p], [[∂_v^b_nu p]]) for p = ∂£/∂v^a_mu.
            let mut dp = Vec::new();
            for a in 0..n {
                force.push(compile(&chart, &l.force(a))?);
                let mut row = Vec::new();
                for mu in 0..m {
                    let p = l.momentum(a, mu);
                    let dx = compile(&chart, &p.diff(&chart.base()[mu]))?;
                    let dy = (0..n)
                        .map(|b| compile(&chart, &p.diff(&chart.fiber()[b])))
                        .collect::<Result<Vec<_>>>()?;
                    let dv = (0..n)
                        .map(|b| {
                            (0..m)
                                .map(|nu| compile(&chart, &p.diff(chart.jet_var(b, nu))))
                                .collect()
                        })
                        .collect::<Result<Vec<Vec<CompiledExpr>>>>()?;
                    row.push((dx, dy, dv));
                }
                dp.push(row);
            }
            interior
                .par_iter()
                .flat_map_iter(|idx| {
                    let p = point(idx);
                    (0..n)
                        .map(|a| {
                            let mut r = force[a].eval(&p);
                            for (mu, (dx, dy, dv)) in dp[a].iter().enumerate() {
                                let mut total = dx.eval(&p);
                                for b in 0..n {
                                    total += dy[b].eval(&p) * p[chart.jet_index(b, mu)];
                                    for nu in 0..m {
                                        total += dv[b][nu].eval(&p) * st.d2(fcols[b], idx, nu, mu);
                                    }
                                }
                                r -= total;
                            }
                            r
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        }
        ResidualTarget::JetField(j) => {
            let gcols: Option<Vec<Vec<usize>>> = (0..n)
                .map(|a| (0..m).map(|mu| column(sec, chart.jet_var(a, mu)).ok()).collect())
                .collect();
            let fs = j
                .f()
                .iter()
                .map(|r| r.iter().map(|e| compile(&chart, e)).collect())
                .collect::<Result<Vec<Vec<_>>>>()?;
            let gs = j
                .g()
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|row| row.iter().map(|e| compile(&chart, e)).collect())
                        .collect()
                })
                .collect::<Result<Vec<Vec<Vec<_>>>>>()?;
            match gcols {
                Some(gcols) => interior
                    .par_iter()
                    .flat_map_iter(|idx| {
                        let mut p = point(idx);
                        for a in 0..n {
                            for mu in 0..m {
                                p[chart.jet_index(a, mu)] = st.at(gcols[a][mu], idx);
                            }
                        }
                        let mut out = Vec::new();
                        for a in 0..n {
                            for mu in 0..m {
                                out.push(st.d1(fcols[a], idx, mu) - fs[a][mu].eval(&p));
                                for rho in 0..m {
                                    out.push(st.d1(gcols[a][rho], idx, mu) - gs[a][mu][rho].eval(&p));
                                }
                            }
                        }
                        out
                    })
                    .collect(),
                None => {
                    for e in j.sopde_residual().iter().flatten() {
                        if !is_zero(e, &SimplifyConfig::default())?.is_zero() {
                            return Err(Error::InvalidConfig(
                                "section has no jet values and the jet field is not a SOPDE".into(),
                            ));
                        }
                    }
                    interior
                        .par_iter()
                        .flat_map_iter(|idx| {
                            let p = point(idx);
                            let mut out = Vec::new();
                            for a in 0..n {
                                for mu in 0..m {
                                    for rho in 0..m {
                                        out.push(st.d2(fcols[a], idx, mu, rho) - gs[a][mu][rho].eval(&p));
                                    }
                                }
                            }
                            out
                        })
                        .collect()
                }
            }
        }
    };
    Ok(max_abs(residuals))
}
