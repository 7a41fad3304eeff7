use serde::{Deserialize, Serialize};

use super::linear::reduce_family;
use super::{el_system, f_name, Lagrangian, PivotPolicy};
use crate::error::{Error, Result};
use crate::geometry::{ConstraintSet, Membership, Provenance, Reducer};
use crate::symcore::{Confidence, Expr, SimplifyConfig};

type Family = (Vec<(String, Expr)>, Vec<String>, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularMode {
    /// Impose F = v from the start.
    #[default]
    Sopde,
    /// Run the constraint algorithm with F free, then impose F = v.
    TwoStep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularConfig {
    pub simplify: SimplifyConfig,
    pub depth_bound: usize,
    pub mode: SingularMode,
    pub policy: PivotPolicy,
}

impl Default for SingularConfig {
    fn default() -> Self {
        SingularConfig {
            simplify: SimplifyConfig::default(),
            depth_bound: 10,
            mode: SingularMode::Sopde,
            policy: PivotPolicy::Diag,
        }
    }
}

/// Snapshot passed to the progress callback before each level.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularProgress {
    pub level: usize,
    pub constraints: usize,
    pub equations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SingularVerdict {
    FinalSubmanifold,
    NoSolution,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularLevel {
    pub level: usize,
    /// `constraint` while F is free in two-step mode, `sopde` otherwise.
    pub phase: String,
    pub rank: usize,
    pub new_constraints: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularState {
    pub mode: SingularMode,
    pub policy: PivotPolicy,
    pub verdict: SingularVerdict,
    pub constraints: ConstraintSet,
    pub levels: Vec<SingularLevel>,
    /// Constraints of the first stage in two-step mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage_one: Option<ConstraintSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Expr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub unknowns: Vec<String>,
    /// Solved unknowns with their values on the final set.
    pub pivots: Vec<(String, Expr)>,
    pub free: Vec<String>,
    pub rank: usize,
    /// dim J¹E minus the number of constraints used as independent.
    pub dimension_estimate: usize,
    pub confidence: Confidence,
    pub assumptions: Vec<String>,
}

pub fn singular_algorithm(l: &Lagrangian, cfg: &SingularConfig) -> Result<SingularState> {
    singular_algorithm_with_progress(l, cfg, &|_| true)
}

struct Rows {
    coeff: Vec<Vec<Expr>>,
    rhs: Vec<Expr>,
}

impl Rows {
    fn push(&mut self, coeff: Vec<Expr>, rhs: Expr) {
        self.coeff.push(coeff);
        self.rhs.push(rhs);
    }
}

/// Runs the compatibility and tangency steps. The callback may return
/// `false` to cancel, which yields [`Error::Cancelled`].
pub fn singular_algorithm_with_progress(
    l: &Lagrangian,
    cfg: &SingularConfig,
    progress: &dyn Fn(&SingularProgress) -> bool,
) -> Result<SingularState> {
    let c = l.chart().clone();
    let (m, n) = (c.m(), c.n());
    let sys = el_system(l);
    let with_f = cfg.mode == SingularMode::TwoStep;
    let nf = if with_f { n * m } else { 0 };
    let ng = n * m * m;
    let mut unknowns: Vec<String> = Vec::new();
    if with_f {
        for b in 0..n {
            for mu in 0..m {
                unknowns.push(f_name(b, mu));
            }
        }
    }
    unknowns.extend(sys.unknowns.iter().cloned());
    let symbols: Vec<Expr> = unknowns.iter().map(|s| Expr::var(s)).collect();
    let v = |a: usize, mu: usize| Expr::var(c.jet_var(a, mu));
    let fcol = |b: usize, mu: usize| b * m + mu;
    let gcol = |b: usize, nu: usize, mu: usize| nf + b * m * m + nu * m + mu;

    let mut rows = Rows {
        coeff: Vec::new(),
        rhs: Vec::new(),
    };
    if with_f {
        let h = sys.hessian();
        for a in 0..n {
            for nu in 0..m {
                let mut coeff = vec![Expr::zero(); nf + ng];
                let mut rhs = Expr::zero();
                for b in 0..n {
                    for mu in 0..m {
                        let e = h.get(a * m + nu, b * m + mu);
                        coeff[fcol(b, mu)] = e.clone();
                        rhs = rhs + e * v(b, mu);
                    }
                }
                rows.push(coeff, rhs);
            }
        }
        let mixed = sys.mixed();
        for a in 0..n {
            let mut coeff = vec![Expr::zero(); nf];
            coeff.extend(sys.coefficients[a].iter().cloned());
            let mut rhs = sys.rhs[a].clone();
            for b in 0..n {
                for mu in 0..m {
                    let k = &mixed[b][a][mu] - &mixed[a][b][mu];
                    rhs = rhs + &k * v(b, mu);
                    coeff[fcol(b, mu)] = k;
                }
            }
            rows.push(coeff, rhs);
        }
    } else {
        for a in 0..n {
            rows.push(sys.coefficients[a].clone(), sys.rhs[a].clone());
        }
    }

    let mut order: Vec<usize> = (0..nf).collect();
    order.extend(cfg.policy.order(m, n).into_iter().map(|i| i + nf));
    let elim = c.elimination_order();
    let mut sopde_imposed = !with_f;

    let tangency_rows = |rows: &mut Rows, con: &Expr, sopde: bool| {
        for mu in 0..m {
            let mut coeff = vec![Expr::zero(); nf + ng];
            let mut rhs = -con.diff(&c.base()[mu]);
            for a in 0..n {
                let dy = con.diff(&c.fiber()[a]);
                if !dy.is_exact_zero() {
                    if sopde {
                        rhs = rhs - v(a, mu) * &dy;
                    } else {
                        coeff[fcol(a, mu)] = dy;
                    }
                }
                for rho in 0..m {
                    coeff[gcol(a, mu, rho)] = con.diff(c.jet_var(a, rho));
                }
            }
            rows.push(coeff, rhs);
        }
    };

    let mut constraints = ConstraintSet::new();
    let mut levels = Vec::new();
    let mut stage_one = None;
    let mut conf = Confidence::Exact;
    let mut dimension = c.dim();
    let mut level = 1;
    let mut assumptions = vec![
        "each constraint set is a regular submanifold".to_string(),
        "the projection of each constraint submanifold onto the base is onto".to_string(),
    ];
    let finish = |verdict: SingularVerdict,
                  constraints: ConstraintSet,
                  levels: Vec<SingularLevel>,
                  stage_one: Option<ConstraintSet>,
                  witness: Option<Expr>,
                  reason: Option<String>,
                  family: Option<Family>,
                  dimension: usize,
                  conf: Confidence,
                  assumptions: Vec<String>| {
        let (pivots, free, rank) = family.unwrap_or_default();
        SingularState {
            mode: cfg.mode,
            policy: cfg.policy,
            verdict,
            constraints,
            levels,
            stage_one,
            witness,
            reason,
            unknowns: unknowns.clone(),
            pivots,
            free,
            rank,
            dimension_estimate: dimension,
            confidence: conf,
            assumptions,
        }
    };

    loop {
        let snapshot = SingularProgress {
            level,
            constraints: constraints.len(),
            equations: rows.rhs.len(),
        };
        if !progress(&snapshot) {
            return Err(Error::Cancelled);
        }
        if level > cfg.depth_bound {
            return Ok(finish(
                SingularVerdict::Inconclusive,
                constraints,
                levels,
                stage_one,
                None,
                Some(format!("depth bound {} reached", cfg.depth_bound)),
                None,
                dimension,
                conf,
                assumptions,
            ));
        }
        let reducer = match Reducer::build(&constraints.exprs(), &elim, &cfg.simplify)? {
            Ok(r) => r,
            Err(w) => {
                return Ok(finish(
                    SingularVerdict::NoSolution,
                    constraints,
                    levels,
                    stage_one,
                    Some(w),
                    Some("a constraint reduces to a nonzero constant".into()),
                    None,
                    dimension,
                    conf,
                    assumptions,
                ))
            }
        };
        dimension = c.dim() - (reducer.substitutions().len() + reducer.residual().len()).min(c.dim());
        if dimension < m {
            return Ok(finish(
                SingularVerdict::NoSolution,
                constraints,
                levels,
                stage_one,
                None,
                Some(format!("constraint submanifold has dimension {dimension} < {m}")),
                None,
                dimension,
                conf,
                assumptions,
            ));
        }
        let coeff = rows
            .coeff
            .iter()
            .map(|r| r.iter().map(|e| reducer.reduce(e)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let rhs = rows.rhs.iter().map(|e| reducer.reduce(e)).collect::<Result<Vec<_>>>()?;
        let fam = reduce_family(&coeff, &rhs, &order, &symbols, &cfg.simplify)?;
        conf = conf.and(fam.confidence);
        let mut fresh = Vec::new();
        for comp in &fam.compatibility {
            match reducer.vanishes(comp)? {
                Membership::Zero(cz) => conf = conf.and(cz),
                Membership::Nonzero(cz, r) => {
                    conf = conf.and(cz);
                    if r.is_constant() {
                        levels.push(SingularLevel {
                            level,
                            phase: phase_name(sopde_imposed),
                            rank: fam.rank,
                            new_constraints: vec![r.clone()],
                        });
                        return Ok(finish(
                            SingularVerdict::NoSolution,
                            constraints,
                            levels,
                            stage_one,
                            Some(r),
                            Some("compatibility condition reduces to a nonzero constant".into()),
                            None,
                            dimension,
                            conf,
                            assumptions,
                        ));
                    }
                    fresh.push(r);
                }
                Membership::Undecided(r) => {
                    conf = Confidence::Numeric;
                    return Ok(finish(
                        SingularVerdict::Inconclusive,
                        constraints,
                        levels,
                        stage_one,
                        None,
                        Some(format!("could not decide whether `{r}` vanishes on the constraint set")),
                        None,
                        dimension,
                        conf,
                        assumptions,
                    ));
                }
            }
        }
        let provenance = if level == 1 {
            Provenance::Compatibility
        } else {
            Provenance::Tangency { level: level - 1 }
        };
        let mut added = Vec::new();
        for r in fresh {
            if constraints.push(&r, provenance) {
                added.push(constraints.iter().last().expect("just pushed").expr.clone());
            }
        }
        levels.push(SingularLevel {
            level,
            phase: phase_name(sopde_imposed),
            rank: fam.rank,
            new_constraints: added.clone(),
        });
        if added.is_empty() {
            if !sopde_imposed {
                sopde_imposed = true;
                stage_one = Some(constraints.clone());
                for b in 0..n {
                    for mu in 0..m {
                        let mut coeff = vec![Expr::zero(); nf + ng];
                        coeff[fcol(b, mu)] = Expr::one();
                        rows.push(coeff, v(b, mu));
                    }
                }
                level += 1;
                continue;
            }
            let pivots = fam
                .solved
                .iter()
                .map(|(i, e)| (unknowns[*i].clone(), e.clone()))
                .collect();
            let free = fam.free.iter().map(|&i| unknowns[i].clone()).collect();
            if constraints
                .iter()
                .any(|k| k.expr.free_vars().iter().all(|x| c.base().contains(x)))
            {
                assumptions.push("a constraint depends on base coordinates only".into());
            }
            return Ok(finish(
                SingularVerdict::FinalSubmanifold,
                constraints,
                levels,
                stage_one,
                None,
                None,
                Some((pivots, free, fam.rank)),
                dimension,
                conf,
                assumptions,
            ));
        }
        for con in &added {
            tangency_rows(&mut rows, con, sopde_imposed);
        }
        level += 1;
    }
}

fn phase_name(sopde: bool) -> String {
    if sopde { "sopde" } else { "constraint" }.to_string()
}
