use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::compile;
use crate::error::{Error, Result};
use crate::geometry::ChartSpec;
use crate::jet::{prolong_section, Section};
use crate::symcore::Expr;

/// Rectangular grid over a box of the base; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseGrid {
    axes: Vec<Vec<f64>>,
}

impl BaseGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<BaseGrid> {
        for (i, a) in axes.iter().enumerate() {
            if a.is_empty() || a.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "axis {i} is empty or has non-finite nodes"
                )));
            }
            let up = a.windows(2).all(|w| w[0] < w[1]);
            let down = a.windows(2).all(|w| w[0] > w[1]);
            if !(up || down) {
                return Err(Error::InvalidConfig(format!("axis {i} is not strictly monotone")));
            }
        }
        Ok(BaseGrid { axes })
    }

    /// `nodes` equally spaced points from `lo` to `hi` on every axis.
    pub fn uniform(bounds: &[(f64, f64)], nodes: usize) -> Result<BaseGrid> {
        if nodes < 2 {
            return Err(Error::InvalidConfig("a uniform axis needs at least 2 nodes".into()));
        }
        BaseGrid::new(
            bounds
                .iter()
                .map(|&(lo, hi)| {
                    (0..nodes)
                        .map(|i| lo + (hi - lo) * i as f64 / (nodes - 1) as f64)
                        .collect()
                })
                .collect(),
        )
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of a multi-index.
    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.len() + i)
    }

    /// Multi-index of a flat index.
    pub fn multi(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for (i, a) in self.axes.iter().enumerate().rev() {
            out[i] = k % a.len();
            k /= a.len();
        }
        out
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().zip(&self.axes).map(|(&i, a)| a[i]).collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.point(&self.multi(k))).collect()
    }
}

/// Values of the non-base coordinates at every node of a base grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSection {
    base: Vec<String>,
    names: Vec<String>,
    grid: BaseGrid,
    values: Vec<Vec<f64>>,
}

impl NumericSection {
    /// `values[k]` lists the non-base coordinates of the chart at node `k`.
    pub fn new(chart: &ChartSpec, grid: BaseGrid, values: Vec<Vec<f64>>) -> Result<NumericSection> {
        let names: Vec<String> = chart.coords()[chart.m()..].to_vec();
        NumericSection::from_parts(chart.base().to_vec(), names, grid, values)
    }

    pub fn from_parts(
        base: Vec<String>,
        names: Vec<String>,
        grid: BaseGrid,
        values: Vec<Vec<f64>>,
    ) -> Result<NumericSection> {
        if grid.axes().len() != base.len() {
            return Err(Error::InvalidConfig(format!(
                "grid has {} axes for {} base coordinates",
                grid.axes().len(),
                base.len()
            )));
        }
        if values.len() != grid.len() || values.iter().any(|v| v.len() != names.len()) {
            return Err(Error::InvalidConfig("section values do not match the grid".into()));
        }
        Ok(NumericSection {
            base,
            names,
            grid,
            values,
        })
    }

    /// Samples a symbolic section, with ∂f/∂x as the jet values when the chart has them.
    pub fn sample(phi: &Section, grid: &BaseGrid) -> Result<NumericSection> {
        let c: &Arc<ChartSpec> = phi.chart();
        let mut names: Vec<String> = c.fiber().to_vec();
        let mut exprs: Vec<Expr> = phi.f().to_vec();
        if c.has_jet() {
            let psi = prolong_section(phi)?;
            for a in 0..c.n() {
                for mu in 0..c.m() {
                    names.push(c.jet_var(a, mu).to_string());
                    exprs.push(psi.g()[a][mu].clone());
                }
            }
        }
        let compiled = exprs
            .iter()
            .map(|e| compile(c, &e.clone()))
            .collect::<Result<Vec<_>>>()?;
        let dim = c.dim();
        let values = grid
            .nodes()
            .iter()
            .map(|x| {
                let mut p = vec![0.0; dim];
                p[..x.len()].copy_from_slice(x);
                compiled.iter().map(|f| f.eval(&p)).collect()
            })
            .collect();
        NumericSection::from_parts(c.base().to_vec(), names, grid.clone(), values)
    }

    pub fn base(&self) -> &[String] {
        &self.base
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn grid(&self) -> &BaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.values.iter().map(|v| v[i]).collect())
    }

    /// Largest |value − exact| over all nodes, for exact values given as functions of the base coordinates.
    pub fn max_error(&self, exact: &[(&str, Expr)]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (name, e) in exact {
            let col = self
                .column(name)
                .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))?;
            let f = crate::symcore::CompiledExpr::compile(e, &self.base)
                .map_err(|u| Error::InvalidConfig(format!("`{}` has no numeric value", u.0)))?;
            for (k, x) in self.grid.nodes().iter().enumerate() {
                let d = (col[k] - f.eval(x)).abs();
                worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
            }
        }
        Ok(worst)
    }

    /// Header with coordinate names, then one node per line with 17 significant digits.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidConfig(format!("csv: {e}"));
        w.write_record(self.base.iter().chain(&self.names)).map_err(io)?;
        for (k, row) in self.values.iter().enumerate() {
            let x = self.grid.point(&self.grid.multi(k));
            w.write_record(x.iter().chain(row).map(|v| format!("{v:.16e}")))
                .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
    }

    /// Reads [`NumericSection::to_csv`] output; the first `m` columns are the base.
    pub fn from_csv(text: &str, m: usize) -> Result<NumericSection> {
        let bad = |e: String| Error::InvalidConfig(format!("csv: {e}"));
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        if header.len() < m {
            return Err(bad(format!("expected at least {m} columns")));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); m];
        for row in &rows {
            for (i, axis) in axes.iter_mut().enumerate() {
                if !axis.contains(&row[i]) {
                    axis.push(row[i]);
                }
            }
        }
        let grid = BaseGrid::new(axes)?;
        if grid.len() != rows.len() {
            return Err(bad("rows do not form a rectangular grid".into()));
        }
        for (k, row) in rows.iter().enumerate() {
            if grid.point(&grid.multi(k)) != row[..m] {
                return Err(bad(format!("row {} is out of grid order", k + 1)));
            }
        }
        let values = rows.into_iter().map(|r| r[m..].to_vec()).collect();
        NumericSection::from_parts(header[..m].to_vec(), header[m..].to_vec(), grid, values)
    }
}
