use crate::error::Result;
use crate::symcore::{Confidence, Expr, Matrix, SimplifyConfig};

/// Reduced form of a linear system `coeff · u = rhs` in named unknowns.
#[derive(Debug, Clone)]
pub(crate) struct LinearFamily {
    /// `(unknown index, value)`; values may contain the free unknowns.
    pub solved: Vec<(usize, Expr)>,
    pub free: Vec<usize>,
    /// Combinations λ·rhs attached to rows whose coefficients reduced to zero.
    pub compatibility: Vec<Expr>,
    pub rank: usize,
    pub confidence: Confidence,
}

/// Gauss-Jordan on `[coeff | I]` with columns scanned in `order`, pivoting
/// only in the coefficient block; the identity block records the row operations so that compatibility
/// conditions keep their exact right-hand sides.
pub(crate) fn reduce_family(
    coeff: &[Vec<Expr>],
    rhs: &[Expr],
    order: &[usize],
    symbols: &[Expr],
    cfg: &SimplifyConfig,
) -> Result<LinearFamily> {
    let rows = coeff.len();
    let k = order.len();
    let mut aug = Matrix::zeros(rows, k + rows);
    for (i, row) in coeff.iter().enumerate() {
        for (jj, &j) in order.iter().enumerate() {
            aug.set(i, jj, row[j].clone());
        }
        aug.set(i, k + i, Expr::one());
    }
    let (red, info) = aug.row_reduce_prefix(cfg, k)?;
    let rank = info.pivots.iter().filter(|&&(_, c)| c < k).count();
    let combine = |i: usize| Expr::sum((0..rows).map(|j| red.get(i, k + j) * &rhs[j]));
    let pivot_cols: Vec<usize> = info.pivots.iter().filter(|&&(_, c)| c < k).map(|&(_, c)| c).collect();
    let free: Vec<usize> = (0..k).filter(|c| !pivot_cols.contains(c)).map(|c| order[c]).collect();
    let mut solved = Vec::new();
    for (i, &pc) in pivot_cols.iter().enumerate() {
        let mut value = combine(i);
        for (jj, &j) in order.iter().enumerate() {
            if jj != pc && !pivot_cols.contains(&jj) {
                let c = red.get(i, jj);
                if !c.is_exact_zero() {
                    value = value - c * &symbols[j];
                }
            }
        }
        solved.push((order[pc], value));
    }
    let compatibility = (rank..rows).map(combine).filter(|e| !e.is_exact_zero()).collect();
    Ok(LinearFamily {
        solved,
        free,
        compatibility,
        rank,
        confidence: info.confidence,
    })
}
