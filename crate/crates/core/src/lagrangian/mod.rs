//! Poincaré–Cartan forms, regularity and the Euler–Lagrange equations for
//! multivector fields.

mod linear;
mod singular;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChartSpec, DecomposableMVF};
use crate::jet::{sopde_integrability_conditions, AdaptedForm, JetFieldJ1, Section, SopdeConditions};
use crate::symcore::{is_zero, Confidence, Expr, Matrix, SimplifyConfig};

pub use singular::{
    singular_algorithm, singular_algorithm_with_progress, SingularConfig, SingularLevel, SingularMode,
    SingularProgress, SingularState, SingularVerdict,
};

/// Lagrangian density £(x, y, v) on a jet chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lagrangian {
    #[serde(skip)]
    chart: Arc<ChartSpec>,
    density: Expr,
}

impl Lagrangian {
    pub fn new(chart: &Arc<ChartSpec>, density: Expr) -> Result<Lagrangian> {
        chart.require_jet()?;
        for v in density.free_vars() {
            if !chart.is_declared(&v) {
                return Err(Error::UnknownCoordinate(v));
            }
        }
        Ok(Lagrangian {
            chart: chart.clone(),
            density,
        })
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn density(&self) -> &Expr {
        &self.density
    }

    /// ∂£/∂v^A_μ.
    pub fn momentum(&self, a: usize, mu: usize) -> Expr {
        self.density.diff(self.chart.jet_var(a, mu))
    }

    /// ∂£/∂y^A.
    pub fn force(&self, a: usize) -> Expr {
        self.density.diff(&self.chart.fiber()[a])
    }
}

/// Θ_L and Ω_L, with Ω_L both from its coordinate table and as −dΘ_L.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PCForms {
    pub theta_l: AdaptedForm,
    pub omega_l: AdaptedForm,
    pub minus_d_theta: AdaptedForm,
    pub consistent: bool,
    pub confidence: Confidence,
}

pub fn poincare_cartan(l: &Lagrangian, cfg: &SimplifyConfig) -> Result<PCForms> {
    let c = &l.chart;
    let (m, n) = (c.m(), c.n());
    let vol = AdaptedForm::volume(c);
    let minors: Vec<AdaptedForm> = (0..m).map(|mu| AdaptedForm::volume_minor(c, mu)).collect();
    let dy: Vec<AdaptedForm> = (0..n)
        .map(|a| AdaptedForm::basis(c, vec![c.fiber_index(a)], Expr::one()))
        .collect();
    let dv = |b: usize, nu: usize| AdaptedForm::basis(c, vec![c.jet_index(b, nu)], Expr::one());
    let v = |a: usize, mu: usize| Expr::var(c.jet_var(a, mu));

    let mut energy = -l.density.clone();
    let mut theta = AdaptedForm::zero(c, m);
    for a in 0..n {
        for mu in 0..m {
            let p = l.momentum(a, mu);
            energy = energy + &p * v(a, mu);
            theta = theta.add(&dy[a].wedge(&minors[mu])?.scale(&p))?;
        }
    }
    theta = theta.add(&vol.scale(&-energy))?;

    let mut omega = AdaptedForm::zero(c, m + 1);
    for a in 0..n {
        for mu in 0..m {
            let p = l.momentum(a, mu);
            let dy_minor = dy[a].wedge(&minors[mu])?;
            for b in 0..n {
                for nu in 0..m {
                    let h = p.diff(c.jet_var(b, nu));
                    if !h.is_exact_zero() {
                        omega = omega.add(&dv(b, nu).wedge(&dy_minor)?.scale(&-&h))?;
                        omega = omega.add(&dv(b, nu).wedge(&vol)?.scale(&(&h * v(a, mu))))?;
                    }
                }
                let k = p.diff(&c.fiber()[b]);
                if !k.is_exact_zero() {
                    omega = omega.add(&dy[b].wedge(&dy_minor)?.scale(&-&k))?;
                }
            }
        }
    }
    for b in 0..n {
        let mut coeff = -l.force(b);
        for mu in 0..m {
            coeff = coeff + l.momentum(b, mu).diff(&c.base()[mu]);
            for a in 0..n {
                coeff = coeff + l.momentum(a, mu).diff(&c.fiber()[b]) * v(a, mu);
            }
        }
        omega = omega.add(&dy[b].wedge(&vol)?.scale(&coeff))?;
    }

    let minus_d_theta = theta.d().neg();
    let (consistent, confidence) = omega.sub(&minus_d_theta)?.vanishes(cfg)?;
    Ok(PCForms {
        theta_l: theta,
        omega_l: omega,
        minus_d_theta,
        consistent,
        confidence,
    })
}

/// i(X₁ ∧ … ∧ X_m)Ω_L, contracting X₁ first.
pub fn evolution_residual(pc: &PCForms, x: &DecomposableMVF) -> Result<AdaptedForm> {
    let mut acc = pc.omega_l.clone();
    for f in x.factors() {
        acc = acc.interior(f)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityVerdict {
    /// The Hessian determinant is a nonzero constant.
    Regular,
    /// The determinant vanishes identically.
    Singular,
    /// Nonzero determinant that is not constant; regular off its zero set.
    Pointwise,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    /// Rows and columns indexed by A·m + μ.
    pub hessian: Matrix,
    pub determinant: Expr,
    pub verdict: RegularityVerdict,
    pub confidence: Confidence,
}

pub fn hessian(l: &Lagrangian) -> Matrix {
    let c = &l.chart;
    let (m, n) = (c.m(), c.n());
    let k = n * m;
    let mut h = Matrix::zeros(k, k);
    for a in 0..n {
        for mu in 0..m {
            let p = l.momentum(a, mu);
            for b in 0..n {
                for nu in 0..m {
                    h.set(a * m + mu, b * m + nu, p.diff(c.jet_var(b, nu)));
                }
            }
        }
    }
    h
}

pub fn regularity(l: &Lagrangian, cfg: &SimplifyConfig) -> Result<RegularityReport> {
    let h = hessian(l);
    let det = h.determinant();
    let z = is_zero(&det, cfg)?;
    let verdict = if z.is_zero() {
        RegularityVerdict::Singular
    } else if det.is_constant() {
        RegularityVerdict::Regular
    } else {
        RegularityVerdict::Pointwise
    };
    Ok(RegularityReport {
        hessian: h,
        determinant: det,
        verdict,
        confidence: z.confidence(),
    })
}

/// Name of the unknown G^B_{νμ}.
pub fn g_name(b: usize, nu: usize, mu: usize) -> String {
    format!("G{b}_{nu}_{mu}")
}

/// Name of the unknown F^B_μ.
pub fn f_name(b: usize, mu: usize) -> String {
    format!("F{b}_{mu}")
}

/// The linear system Σ H^{νμ}_{BA} G^B_{νμ} = b_A with unknowns ordered
/// `(B, ν, μ)` and column index B·m² + ν·m + μ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ELSystem {
    #[serde(skip)]
    chart: Arc<ChartSpec>,
    pub unknowns: Vec<String>,
    pub coefficients: Vec<Vec<Expr>>,
    pub rhs: Vec<Expr>,
    #[serde(skip)]
    hessian: Matrix,
    #[serde(skip)]
    mixed: Vec<Vec<Vec<Expr>>>,
}

impl ELSystem {
    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    fn col(&self, b: usize, nu: usize, mu: usize) -> usize {
        let m = self.chart.m();
        b * m * m + nu * m + mu
    }

    pub fn symbols(&self) -> Vec<Expr> {
        self.unknowns.iter().map(|s| Expr::var(s)).collect()
    }

    /// b_A − Σ H G with the unknowns as symbols.
    pub fn equations(&self) -> Vec<Expr> {
        let syms = self.symbols();
        self.coefficients
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| {
                let lhs = Expr::sum(
                    row.iter()
                        .zip(&syms)
                        .filter(|(c, _)| !c.is_exact_zero())
                        .map(|(c, s)| c * s),
                );
                b - &lhs
            })
            .collect()
    }

    /// b_A − Σ H G for a concrete G indexed `[B][ν][μ]`.
    pub fn residual(&self, g: &[Vec<Vec<Expr>>]) -> Vec<Expr> {
        let m = self.chart.m();
        self.coefficients
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| {
                let mut acc = b.clone();
                for (bb, gb) in g.iter().enumerate() {
                    for nu in 0..m {
                        for mu in 0..m {
                            let c = &row[self.col(bb, nu, mu)];
                            if !c.is_exact_zero() {
                                acc = acc - c * &gb[nu][mu];
                            }
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Coefficients on dv^A_ν of i(X)Ω_L before F = v is imposed:
    /// Σ (F^B_μ − v^B_μ) ∂²£/∂v^A_ν∂v^B_μ, indexed `[A][ν]`.
    pub fn sopde_forcing_residual(&self, f: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
        let c = &self.chart;
        let (m, n) = (c.m(), c.n());
        (0..n)
            .map(|a| {
                (0..m)
                    .map(|nu| {
                        let mut acc = Expr::zero();
                        for b in 0..n {
                            for mu in 0..m {
                                let h = self.hessian.get(a * m + nu, b * m + mu);
                                if !h.is_exact_zero() {
                                    acc = acc + (&f[b][mu] - Expr::var(c.jet_var(b, mu))) * h;
                                }
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Coefficients on dy^A before F = v is imposed, for arbitrary (F, G).
    pub fn general_residual(&self, f: &[Vec<Expr>], g: &[Vec<Vec<Expr>>]) -> Vec<Expr> {
        let c = &self.chart;
        let (m, n) = (c.m(), c.n());
        let base = self.residual(g);
        base.into_iter()
            .enumerate()
            .map(|(a, mut acc)| {
                for b in 0..n {
                    for mu in 0..m {
                        let d = &f[b][mu] - Expr::var(c.jet_var(b, mu));
                        if d.is_exact_zero() {
                            continue;
                        }
                        let k = &self.mixed[b][a][mu] - &self.mixed[a][b][mu];
                        acc = acc - k * d;
                    }
                }
                acc
            })
            .collect()
    }

    /// ∂²£/∂y^B∂v^A_μ indexed `[B][A][μ]`.
    pub(crate) fn mixed(&self) -> &[Vec<Vec<Expr>>] {
        &self.mixed
    }

    pub(crate) fn hessian(&self) -> &Matrix {
        &self.hessian
    }
}

/// The Euler–Lagrange system for G with F = v imposed.
pub fn el_system(l: &Lagrangian) -> ELSystem {
    let c = &l.chart;
    let (m, n) = (c.m(), c.n());
    let h = hessian(l);
    let mut unknowns = Vec::with_capacity(n * m * m);
    for b in 0..n {
        for nu in 0..m {
            for mu in 0..m {
                unknowns.push(g_name(b, nu, mu));
            }
        }
    }
    let mixed: Vec<Vec<Vec<Expr>>> = (0..n)
        .map(|b| {
            (0..n)
                .map(|a| (0..m).map(|mu| l.momentum(a, mu).diff(&c.fiber()[b])).collect())
                .collect()
        })
        .collect();
    let mut coefficients = vec![vec![Expr::zero(); n * m * m]; n];
    let mut rhs = Vec::with_capacity(n);
    for a in 0..n {
        for b in 0..n {
            for nu in 0..m {
                for mu in 0..m {
                    coefficients[a][b * m * m + nu * m + mu] = h.get(b * m + nu, a * m + mu).clone();
                }
            }
        }
        let mut r = l.force(a);
        for mu in 0..m {
            r = r - l.momentum(a, mu).diff(&c.base()[mu]);
            for b in 0..n {
                let k = &mixed[b][a][mu];
                if !k.is_exact_zero() {
                    r = r - k * Expr::var(c.jet_var(b, mu));
                }
            }
        }
        rhs.push(r);
    }
    ELSystem {
        chart: c.clone(),
        unknowns,
        coefficients,
        rhs,
        hessian: h,
        mixed,
    }
}

/// Which unknowns are solved for first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PivotPolicy {
    /// G^B_{00} for each B.
    #[default]
    Diag,
    /// G^B_{m−1,m−1} for each B.
    DiagLast,
    /// Unknowns in their natural order.
    Auto,
}

impl FromStr for PivotPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diag" => Ok(PivotPolicy::Diag),
            "diag-last" => Ok(PivotPolicy::DiagLast),
            "auto" => Ok(PivotPolicy::Auto),
            other => Err(Error::InvalidConfig(format!(
                "unknown pivot policy `{other}` (expected diag, diag-last or auto)"
            ))),
        }
    }
}

impl fmt::Display for PivotPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PivotPolicy::Diag => "diag",
            PivotPolicy::DiagLast => "diag-last",
            PivotPolicy::Auto => "auto",
        })
    }
}

impl PivotPolicy {
    /// Column scan order over the G unknowns.
    pub(crate) fn order(self, m: usize, n: usize) -> Vec<usize> {
        let natural: Vec<usize> = (0..n * m * m).collect();
        let first: Vec<usize> = match self {
            PivotPolicy::Auto => return natural,
            PivotPolicy::Diag => (0..n).map(|b| b * m * m).collect(),
            PivotPolicy::DiagLast => (0..n).map(|b| b * m * m + (m - 1) * m + (m - 1)).collect(),
        };
        first
            .iter()
            .copied()
            .chain(natural.into_iter().filter(|c| !first.contains(c)))
            .collect()
    }
}

/// Solution set of the Euler–Lagrange system: pivot unknowns expressed
/// through the free ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ELSolutionFamily {
    pub policy: PivotPolicy,
    pub pivots: Vec<String>,
    pub free: Vec<String>,
    pub free_count: usize,
    /// G^B_{νμ} indexed `[B][ν][μ]`; free unknowns appear as symbols.
    pub solution: Vec<Vec<Vec<Expr>>>,
    /// Rows of Σ H g = 0 satisfied by the difference of two solutions.
    pub homogeneous: Vec<Expr>,
    /// The system residual of `solution` vanishes identically.
    pub residual_zero: bool,
    pub confidence: Confidence,
}

pub fn solve_regular(
    sys: &ELSystem,
    reg: &RegularityReport,
    policy: PivotPolicy,
    cfg: &SimplifyConfig,
) -> Result<ELSolutionFamily> {
    if reg.verdict == RegularityVerdict::Singular {
        return Err(Error::NotRegular(format!(
            "Hessian determinant `{}` vanishes",
            reg.determinant
        )));
    }
    let c = &sys.chart;
    let (m, n) = (c.m(), c.n());
    let syms = sys.symbols();
    let order = policy.order(m, n);
    let fam = linear::reduce_family(&sys.coefficients, &sys.rhs, &order, &syms, cfg)?;
    if fam.rank < n {
        return Err(Error::NotRegular(format!("system rank {} is below {n}", fam.rank)));
    }
    let mut solution = vec![vec![vec![Expr::zero(); m]; m]; n];
    let mut pivots = Vec::new();
    let mut flat: Vec<Expr> = syms.clone();
    for (idx, value) in &fam.solved {
        flat[*idx] = value.clone();
        pivots.push(sys.unknowns[*idx].clone());
    }
    for b in 0..n {
        for nu in 0..m {
            for mu in 0..m {
                solution[b][nu][mu] = flat[b * m * m + nu * m + mu].clone();
            }
        }
    }
    let residual_zero = sys.residual(&solution).iter().all(Expr::is_exact_zero);
    let homogeneous = sys
        .coefficients
        .iter()
        .map(|row| {
            Expr::sum(
                row.iter()
                    .zip(&sys.unknowns)
                    .filter(|(c, _)| !c.is_exact_zero())
                    .map(|(c, u)| c * Expr::var(&format!("g{}", &u[1..]))),
            )
        })
        .collect();
    let free: Vec<String> = fam.free.iter().map(|&i| sys.unknowns[i].clone()).collect();
    Ok(ELSolutionFamily {
        policy,
        pivots,
        free_count: free.len(),
        free,
        solution,
        homogeneous,
        residual_zero,
        confidence: fam.confidence.and(reg.confidence),
    })
}

/// Residuals of an Euler–Lagrange multivector field built from a solution
/// family and an assignment of its free unknowns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ELIntegrabilityReport {
    /// The instantiated G^B_{νμ}.
    pub g: Vec<Vec<Vec<Expr>>>,
    pub conditions: SopdeConditions,
    pub el_residual: Vec<Expr>,
    pub all_zero: bool,
    pub confidence: Confidence,
}

pub fn instantiate(fam: &ELSolutionFamily, assignment: &HashMap<String, Expr>) -> Result<Vec<Vec<Vec<Expr>>>> {
    for name in &fam.free {
        if !assignment.contains_key(name) {
            return Err(Error::MissingAssignment(name.clone()));
        }
    }
    fam.solution
        .iter()
        .map(|t| {
            t.iter()
                .map(|row| row.iter().map(|e| Ok(e.subs(assignment)?)).collect())
                .collect()
        })
        .collect()
}

pub fn el_integrability_conditions(
    l: &Lagrangian,
    fam: &ELSolutionFamily,
    assignment: &HashMap<String, Expr>,
    cfg: &SimplifyConfig,
) -> Result<ELIntegrabilityReport> {
    let g = instantiate(fam, assignment)?;
    let j = JetFieldJ1::sopde(&l.chart, g.clone())?;
    let conditions = sopde_integrability_conditions(&j, cfg)?;
    let el_residual = el_system(l).residual(&g);
    let (zc, c1) = conditions.vanishes(cfg)?;
    let mut conf = c1;
    let mut ze = true;
    for r in &el_residual {
        if r.is_exact_zero() {
            continue;
        }
        let v = is_zero(r, cfg)?;
        conf = conf.and(v.confidence());
        ze &= v.is_zero();
    }
    Ok(ELIntegrabilityReport {
        g,
        conditions,
        el_residual,
        all_zero: zc && ze,
        confidence: conf,
    })
}

/// (∂£/∂y^A)∘j¹φ − d/dx^μ[(∂£/∂v^A_μ)∘j¹φ].
pub fn el_residual_on_section(l: &Lagrangian, phi: &Section) -> Result<Vec<Expr>> {
    let psi = crate::jet::prolong_section(phi)?;
    let c = &l.chart;
    (0..c.n())
        .map(|a| {
            let mut r = psi.pull(&l.force(a))?;
            for (mu, x) in c.base().iter().enumerate() {
                r = r - psi.pull(&l.momentum(a, mu))?.diff(x);
            }
            Ok(r)
        })
        .collect()
}
