use rayon::prelude::*;
use serde::Serialize;

use super::constraints::{ConstraintSet, Membership, Provenance, Reducer};
use super::field::{lie_bracket, DecomposableMVF};
use crate::error::Result;
use crate::symcore::{factor_constraint, is_zero, Confidence, Expr, Matrix, SimplifyConfig, ZeroVerdict};

/// Coefficients of [Y_μ, Y_ν] = ξ^ρ_{μν} Y_ρ + ζ^l_{μν} ∂/∂z^l, indexed
/// `[μ][ν][ρ]` and `[μ][ν][l]`, where z^l runs over the non-base coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvolutivityDefect {
    pub xi: Vec<Vec<Vec<Expr>>>,
    pub zeta: Vec<Vec<Vec<Expr>>>,
    pub complement: Vec<String>,
}

impl InvolutivityDefect {
    /// Nonzero ζ entries as `(μ, ν, l, value)` with μ < ν.
    pub fn nonzero_zeta(&self) -> Vec<(usize, usize, usize, Expr)> {
        let mut out = Vec::new();
        for (mu, row) in self.zeta.iter().enumerate() {
            for (nu, col) in row.iter().enumerate().skip(mu + 1) {
                for (l, z) in col.iter().enumerate() {
                    if !z.is_exact_zero() {
                        out.push((mu, nu, l, z.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn is_involutive(&self, cfg: &SimplifyConfig) -> Result<(bool, Confidence)> {
        let mut conf = Confidence::Exact;
        for (_, _, _, z) in self.nonzero_zeta() {
            let v = is_zero(&z, cfg)?;
            conf = conf.and(v.confidence());
            if !v.is_zero() {
                return Ok((false, conf));
            }
        }
        Ok((true, conf))
    }

    fn xi_entries(&self) -> impl Iterator<Item = &Expr> {
        self.xi.iter().flatten().flatten()
    }
}

pub fn involutivity_defect(y: &DecomposableMVF) -> Result<InvolutivityDefect> {
    y.check_normalized()?;
    let chart = y.chart();
    let m = chart.m();
    let coords = chart.coords();
    let fs = y.factors();
    let k = coords.len() - m;
    let mut xi = vec![vec![vec![Expr::zero(); m]; m]; m];
    let mut zeta = vec![vec![vec![Expr::zero(); k]; m]; m];
    for mu in 0..m {
        for nu in mu + 1..m {
            let b = lie_bracket(&fs[mu], &fs[nu])?;
            let x: Vec<Expr> = (0..m).map(|rho| b.component(rho).clone()).collect();
            for l in 0..k {
                let mut z = b.component(m + l).clone();
                for (rho, c) in x.iter().enumerate() {
                    if !c.is_exact_zero() {
                        z = z - c * fs[rho].component(m + l);
                    }
                }
                zeta[nu][mu][l] = -&z;
                zeta[mu][nu][l] = z;
            }
            for (rho, c) in x.into_iter().enumerate() {
                xi[nu][mu][rho] = -&c;
                xi[mu][nu][rho] = c;
            }
        }
    }
    Ok(InvolutivityDefect {
        xi,
        zeta,
        complement: coords[m..].to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalityReport {
    pub transverse: bool,
    pub determinant: Expr,
    pub verdict: ZeroVerdict,
}

/// Determinant of the base block of the factors.
pub fn transversality_check(y: &DecomposableMVF, cfg: &SimplifyConfig) -> Result<TransversalityReport> {
    let m = y.chart().m();
    let rows = y
        .factors()
        .iter()
        .map(|f| (0..m).map(|nu| f.component(nu).clone()).collect())
        .collect();
    let det = Matrix::from_rows(rows).determinant();
    let verdict = is_zero(&det, cfg)?;
    Ok(TransversalityReport {
        transverse: !verdict.is_zero(),
        determinant: det,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityConfig {
    pub simplify: SimplifyConfig,
    pub depth_bound: usize,
    /// Cap on the number of branches created from one factorization step.
    pub max_branches: usize,
}

impl Default for IntegrabilityConfig {
    fn default() -> Self {
        IntegrabilityConfig {
            simplify: SimplifyConfig::default(),
            depth_bound: 10,
            max_branches: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchVerdict {
    IntegrableEverywhere,
    IntegrableOnSubmanifold,
    NoSolution,
    Inconclusive,
}

impl BranchVerdict {
    fn rank(self) -> u8 {
        match self {
            BranchVerdict::NoSolution => 0,
            BranchVerdict::Inconclusive => 1,
            BranchVerdict::IntegrableOnSubmanifold => 2,
            BranchVerdict::IntegrableEverywhere => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchNode {
    pub constraints: ConstraintSet,
    pub verdict: BranchVerdict,
    pub level: usize,
    /// All ξ vanish on the final set (leaves with a solution only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamical: Option<bool>,
    /// Nonzero constant proving the branch empty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Expr>,
    /// Where the witness came from, e.g. `Y1(x1 + x2 - y1 - 1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_source: Option<String>,
    /// Expression whose vanishing could not be decided.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offending: Option<Expr>,
    pub confidence: Confidence,
    pub children: Vec<BranchNode>,
}

impl BranchNode {
    fn leaf(constraints: ConstraintSet, verdict: BranchVerdict, level: usize, confidence: Confidence) -> Self {
        BranchNode {
            constraints,
            verdict,
            level,
            dynamical: None,
            witness: None,
            witness_source: None,
            offending: None,
            confidence,
            children: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn leaves(&self) -> Vec<&BranchNode> {
        if self.is_leaf() {
            return vec![self];
        }
        self.children.iter().flat_map(BranchNode::leaves).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchTree {
    pub root: BranchNode,
    pub assumptions: Vec<String>,
    pub confidence: Confidence,
}

impl BranchTree {
    pub fn verdict(&self) -> BranchVerdict {
        self.root.verdict
    }

    pub fn leaves(&self) -> Vec<&BranchNode> {
        self.root.leaves()
    }
}

struct Ctx<'a> {
    y: &'a DecomposableMVF,
    defect: &'a InvolutivityDefect,
    cfg: &'a IntegrabilityConfig,
    order: Vec<String>,
    names: Vec<String>,
}

/// Runs the integrability algorithm: integrability condition, branching on
/// factors, and iterated tangency conditions.
pub fn integrability_algorithm(y: &DecomposableMVF, cfg: &IntegrabilityConfig) -> Result<BranchTree> {
    let defect = involutivity_defect(y)?;
    let ctx = Ctx {
        y,
        defect: &defect,
        cfg,
        order: y.chart().elimination_order(),
        names: (1..=y.chart().m()).map(|i| format!("Y{i}")).collect(),
    };
    let mut conf = Confidence::Exact;
    let mut zetas = Vec::new();
    for (_, _, _, z) in defect.nonzero_zeta() {
        let v = is_zero(&z, &cfg.simplify)?;
        conf = conf.and(v.confidence());
        if !v.is_zero() {
            zetas.push(z);
        }
    }
    let root = if zetas.is_empty() {
        let mut leaf = BranchNode::leaf(ConstraintSet::new(), BranchVerdict::IntegrableEverywhere, 0, conf);
        let mut dyn_conf = Confidence::Exact;
        let mut dynamical = true;
        for x in defect.xi_entries() {
            let v = is_zero(x, &cfg.simplify)?;
            dyn_conf = dyn_conf.and(v.confidence());
            if !v.is_zero() {
                dynamical = false;
                break;
            }
        }
        leaf.dynamical = Some(dynamical);
        leaf.confidence = conf.and(dyn_conf);
        leaf
    } else {
        let children = ctx.branch(&ConstraintSet::new(), &zetas, Provenance::Integrability, 1)?;
        aggregate(ConstraintSet::new(), 0, conf, children)
    };
    let confidence = min_confidence(&root);
    let mut assumptions = Vec::new();
    if !root.is_leaf() {
        assumptions.push("each constraint set defines a closed embedded submanifold (not verified)".to_string());
    }
    Ok(BranchTree {
        root,
        assumptions,
        confidence,
    })
}

fn min_confidence(n: &BranchNode) -> Confidence {
    n.children
        .iter()
        .map(min_confidence)
        .fold(n.confidence, Confidence::and)
}

fn aggregate(constraints: ConstraintSet, level: usize, conf: Confidence, children: Vec<BranchNode>) -> BranchNode {
    let verdict = children
        .iter()
        .map(|c| c.verdict)
        .max_by_key(|v| v.rank())
        .unwrap_or(BranchVerdict::NoSolution);
    let mut node = BranchNode::leaf(constraints, verdict, level, conf);
    node.children = children;
    node
}

impl Ctx<'_> {
    /// Splits `new` into factors and explores every combination.
    fn branch(
        &self,
        parent: &ConstraintSet,
        new: &[Expr],
        provenance: Provenance,
        level: usize,
    ) -> Result<Vec<BranchNode>> {
        for c in new {
            if c.is_constant() {
                let mut leaf = BranchNode::leaf(parent.clone(), BranchVerdict::NoSolution, level, Confidence::Exact);
                leaf.witness = Some(c.clone());
                return Ok(vec![leaf]);
            }
        }
        let mut choices: Vec<Vec<Expr>> = vec![Vec::new()];
        for c in new {
            let mut fs = factor_constraint(c);
            fs.dedup();
            if fs.is_empty() {
                continue;
            }
            if choices.len() * fs.len() > self.cfg.max_branches {
                fs = vec![c.clone()];
            }
            choices = choices
                .into_iter()
                .flat_map(|prefix| {
                    fs.iter().map(move |f| {
                        let mut p = prefix.clone();
                        p.push(f.clone());
                        p
                    })
                })
                .collect();
        }
        let mut sets: Vec<ConstraintSet> = Vec::new();
        for choice in choices {
            let mut s = parent.clone();
            for f in &choice {
                s.push(f, provenance);
            }
            if !sets.contains(&s) {
                sets.push(s);
            }
        }
        sets.into_par_iter().map(|s| self.process(s, level)).collect()
    }

    fn process(&self, set: ConstraintSet, level: usize) -> Result<BranchNode> {
        let sc = &self.cfg.simplify;
        let reducer = match Reducer::build(&set.exprs(), &self.order, sc)? {
            Ok(r) => r,
            Err(witness) => {
                let mut leaf = BranchNode::leaf(set, BranchVerdict::NoSolution, level, Confidence::Exact);
                leaf.witness = Some(witness);
                return Ok(leaf);
            }
        };
        let mut conf = Confidence::Exact;
        let mut new: Vec<(Expr, String)> = Vec::new();
        let current: Vec<Expr> = set.exprs();
        for c in &current {
            for (mu, f) in self.y.factors().iter().enumerate() {
                let t = f.apply(c);
                match reducer.vanishes(&t)? {
                    Membership::Zero(k) => conf = conf.and(k),
                    Membership::Nonzero(k, r) => {
                        conf = conf.and(k);
                        if !new.iter().any(|(e, _)| *e == r) {
                            new.push((r, format!("{}({})", self.names[mu], c)));
                        }
                    }
                    Membership::Undecided(e) => {
                        let mut leaf = BranchNode::leaf(set, BranchVerdict::Inconclusive, level, Confidence::Numeric);
                        leaf.offending = Some(e);
                        return Ok(leaf);
                    }
                }
            }
        }
        if new.is_empty() {
            let mut dynamical = true;
            for x in self.defect.xi_entries() {
                match reducer.vanishes(x)? {
                    Membership::Zero(k) => conf = conf.and(k),
                    _ => {
                        dynamical = false;
                        break;
                    }
                }
            }
            let mut leaf = BranchNode::leaf(set, BranchVerdict::IntegrableOnSubmanifold, level, conf);
            leaf.dynamical = Some(dynamical);
            return Ok(leaf);
        }
        if let Some((w, src)) = new.iter().find(|(e, _)| e.is_constant()) {
            let mut leaf = BranchNode::leaf(set, BranchVerdict::NoSolution, level, conf);
            leaf.witness = Some(w.clone());
            leaf.witness_source = Some(src.clone());
            return Ok(leaf);
        }
        if level >= self.cfg.depth_bound {
            let mut leaf = BranchNode::leaf(set, BranchVerdict::Inconclusive, level, conf);
            leaf.offending = new.first().map(|(e, _)| e.clone());
            return Ok(leaf);
        }
        let exprs: Vec<Expr> = new.into_iter().map(|(e, _)| e).collect();
        let children = self.branch(&set, &exprs, Provenance::Tangency { level }, level + 1)?;
        Ok(aggregate(set, level, conf, children))
    }
}
