use std::fmt;

use serde::Serialize;

use super::zero::{is_zero, Confidence, SimplifyConfig};
use super::{Expr, SymError};

/// Dense matrix of expressions, row-major.
#[derive(Clone, PartialEq, Serialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    pub confidence: Confidence,
    /// Pivot positions in elimination order.
    pub pivots: Vec<(usize, usize)>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![Expr::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Expr::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Matrix {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn row(&self, i: usize) -> &[Expr] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Expr>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let s = Expr::sum((0..self.cols).map(|k| self.get(i, k) * other.get(k, j)));
                out.set(i, j, s);
            }
        }
        out
    }

    /// Fraction-free (Bareiss) determinant.
    pub fn determinant(&self) -> Expr {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Expr::one();
        }
        let mut a = self.clone();
        let mut sign = false;
        let mut prev = Expr::one();
        for k in 0..n - 1 {
            let Some(p) = (k..n).find(|&i| !a.get(i, k).is_exact_zero()) else {
                return Expr::zero();
            };
            if p != k {
                a.swap_rows(p, k);
                sign = !sign;
            }
            let pivot = a.get(k, k).clone();
            for i in k + 1..n {
                let aik = a.get(i, k).clone();
                for j in k + 1..n {
                    let num = &pivot * a.get(i, j) - &aik * a.get(k, j);
                    let v = num.checked_div(&prev).expect("Bareiss pivot is nonzero");
                    a.set(i, j, v);
                }
                a.set(i, k, Expr::zero());
            }
            prev = pivot;
        }
        let d = a.get(n - 1, n - 1).clone();
        if sign {
            -d
        } else {
            d
        }
    }

    /// Gauss-Jordan reduction. Pivots prefer provably nonzero entries.
    pub fn row_reduce(&self, cfg: &SimplifyConfig) -> Result<(Matrix, RankInfo), SymError> {
        self.row_reduce_with(cfg, |_, _| 0)
    }

    /// Gauss-Jordan reduction with a column priority: within the pivot search
    /// columns are scanned left to right, and among candidate rows the one
    /// with the smallest `row_cost(row, col)` wins.
    pub fn row_reduce_with(
        &self,
        cfg: &SimplifyConfig,
        row_cost: impl Fn(usize, usize) -> usize,
    ) -> Result<(Matrix, RankInfo), SymError> {
        self.reduce_impl(cfg, &row_cost, self.cols)
    }

    /// Gauss-Jordan that only pivots within the first `cols` columns; the
    /// remaining columns are carried along.
    pub fn row_reduce_prefix(&self, cfg: &SimplifyConfig, cols: usize) -> Result<(Matrix, RankInfo), SymError> {
        self.reduce_impl(cfg, &|_, _| 0, cols.min(self.cols))
    }

    fn reduce_impl(
        &self,
        cfg: &SimplifyConfig,
        row_cost: &dyn Fn(usize, usize) -> usize,
        limit: usize,
    ) -> Result<(Matrix, RankInfo), SymError> {
        let mut a = self.clone();
        let mut conf = Confidence::Exact;
        let mut pivots = Vec::new();
        let mut r = 0;
        let mut order: Vec<usize> = (0..self.rows).collect();
        for c in 0..limit {
            if r == self.rows {
                break;
            }
            let mut best: Option<(usize, bool, usize)> = None;
            for i in r..self.rows {
                let e = a.get(i, c);
                if e.is_exact_zero() {
                    continue;
                }
                let v = is_zero(e, cfg)?;
                if v.is_zero() {
                    conf = conf.and(v.confidence());
                    a.set(i, c, Expr::zero());
                    continue;
                }
                let proven = v.is_proven();
                let cost = row_cost(order[i], c);
                let better = match best {
                    None => true,
                    Some((_, bp, bc)) => (proven && !bp) || (proven == bp && cost < bc),
                };
                if better {
                    best = Some((i, proven, cost));
                }
            }
            let Some((p, proven, _)) = best else { continue };
            if !proven {
                conf = Confidence::Numeric;
            }
            a.swap_rows(p, r);
            order.swap(p, r);
            let inv = Expr::one().checked_div(a.get(r, c)).expect("pivot is nonzero");
            for j in 0..self.cols {
                let v = a.get(r, j) * &inv;
                a.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = a.get(i, c).clone();
                if f.is_exact_zero() {
                    continue;
                }
                for j in 0..self.cols {
                    let v = a.get(i, j) - &f * a.get(r, j);
                    a.set(i, j, v);
                }
            }
            pivots.push((order[r], c));
            r += 1;
        }
        Ok((
            a,
            RankInfo {
                rank: r,
                confidence: conf,
                pivots,
            },
        ))
    }

    pub fn rank(&self, cfg: &SimplifyConfig) -> Result<RankInfo, SymError> {
        Ok(self.row_reduce(cfg)?.1)
    }

    /// Solves a square system with a nonsingular matrix.
    pub fn solve(&self, rhs: &[Expr], cfg: &SimplifyConfig) -> Result<Option<Vec<Expr>>, SymError> {
        assert_eq!(self.rows, rhs.len());
        let mut aug = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, rhs[i].clone());
        }
        let (red, info) = aug.row_reduce(cfg)?;
        if info.pivots.iter().any(|&(_, c)| c == self.cols) || info.rank < self.cols {
            return Ok(None);
        }
        Ok(Some((0..self.cols).map(|i| red.get(i, self.cols).clone()).collect()))
    }

    pub fn inverse(&self, cfg: &SimplifyConfig) -> Result<Option<Matrix>, SymError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, Expr::one());
        }
        let (red, info) = aug.row_reduce(cfg)?;
        if info.pivots.iter().take(n).any(|&(_, c)| c >= n) || info.rank < n {
            return Ok(None);
        }
        let mut inv = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, red.get(i, n + j).clone());
            }
        }
        Ok(Some(inv))
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|e| e.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}
