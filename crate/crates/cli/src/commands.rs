//! Command dispatch.

use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use multijet_core::geometry::{integrability_algorithm, BranchVerdict, IntegrabilityConfig};
use multijet_core::jet::{
    curvature_e, curvature_j1, jetfield_to_mvf, mvf_to_jetfield, sopde_check, sopde_integrability_conditions,
    JetFieldJ1,
};
use multijet_core::lagrangian::{
    el_integrability_conditions, el_residual_on_section, el_system, poincare_cartan, regularity, singular_algorithm,
    solve_regular, Lagrangian, PivotPolicy, RegularityVerdict, SingularConfig, SingularMode, SingularVerdict,
};
use multijet_core::noether::{
    conserved_current, current_closed_on_section, preserves_contact_module, symmetry_defect, DefectCheck,
};
use multijet_core::numeric::{
    check_flow_commutation, integrate_m_flow, numeric_residual, BaseGrid, NumericSection, ResidualTarget,
};
use multijet_core::symcore::{is_zero, CompiledExpr};
use multijet_core::{Confidence, DecomposableMVF, Error as CoreError, Expr, SimplifyConfig, VectorField};
use serde::Serialize;
use serde_json::{json, Value};

use crate::problem::{ConnectionSpec, InputError, Problem};
use crate::report::{
    confidence_label, ErrorInfo, FlagEcho, Report, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_NEGATIVE, EXIT_POSITIVE,
    SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CheckIntegrability,
    Curvature,
    SopdeCheck,
    EulerLagrange,
    Singular,
    Noether,
    Integrate,
    Residual,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

/// Flags shared by all commands.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: Option<u64>,
    pub depth: usize,
    pub pivot: PivotPolicy,
    pub mode: SingularMode,
    pub tolerance: Option<f64>,
    pub csv: Option<PathBuf>,
    pub acknowledge_defect: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: None,
            depth: 10,
            pivot: PivotPolicy::Diag,
            mode: SingularMode::Sopde,
            tolerance: None,
            csv: None,
            acknowledge_defect: false,
        }
    }
}

impl Settings {
    fn simplify(&self) -> SimplifyConfig {
        let mut cfg = SimplifyConfig::default();
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg
    }

    pub fn echo(&self) -> FlagEcho {
        FlagEcho {
            seed: self.simplify().seed,
            depth: self.depth,
            pivot: self.pivot.to_string(),
            mode: match self.mode {
                SingularMode::Sopde => "sopde".into(),
                SingularMode::TwoStep => "two-step".into(),
            },
            tolerance: self.tolerance,
        }
    }
}

enum Failure {
    Input(InputError),
    Engine(CoreError),
    Io(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::Engine(e)
    }
}

/// Result of one command before it is wrapped into a [`Report`].
struct Outcome {
    verdict: String,
    exit: i32,
    confidence: Confidence,
    assumptions: Vec<String>,
    result: Value,
    summary: Vec<String>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn verdict_name<T: Serialize>(v: &T) -> String {
    match to_value(v) {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

/// 0 for a positive verdict, 1 for a negative one, 2 whenever a numeric zero test was involved.
fn exit_for(positive: bool, conf: Confidence) -> i32 {
    match (conf, positive) {
        (Confidence::Numeric, _) => EXIT_INCONCLUSIVE,
        (_, true) => EXIT_POSITIVE,
        (_, false) => EXIT_NEGATIVE,
    }
}

fn negative_kind(e: &CoreError) -> Option<&'static str> {
    Some(match e {
        CoreError::NotTransverse(_) => "NotTransverse",
        CoreError::NotRegular(_) => "NotRegular",
        CoreError::NotSopde { .. } => "NotSopde",
        CoreError::NonzeroDefect(_) => "NonzeroDefect",
        CoreError::ConstraintViolation { .. } => "ConstraintViolation",
        CoreError::StepRejected(_) => "StepRejected",
        _ => return None,
    })
}

pub fn run(command: Command, file: &str, text: &str, settings: &Settings) -> Report {
    let outcome = Problem::parse(text)
        .map_err(Failure::from)
        .and_then(|p| dispatch(command, &p, settings));
    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        file: file.to_string(),
        flags: settings.echo(),
        verdict: String::new(),
        exit_code: 0,
        confidence: confidence_label(Confidence::Exact).into(),
        assumptions: Vec::new(),
        result: Value::Null,
        error: None,
        summary: Vec::new(),
    };
    match outcome {
        Ok(o) => {
            report.verdict = o.verdict;
            report.exit_code = o.exit;
            report.confidence = confidence_label(o.confidence).into();
            report.assumptions = o.assumptions;
            report.result = o.result;
            report.summary = o.summary;
        }
        Err(f) => {
            let (kind, message, line, exit) = match f {
                Failure::Input(InputError::At { line, message }) => {
                    ("InputError".to_string(), message, Some(line), EXIT_INPUT)
                }
                Failure::Input(e) => ("InputError".to_string(), e.to_string(), None, EXIT_INPUT),
                Failure::Io(m) => ("InputError".to_string(), m, None, EXIT_INPUT),
                Failure::Engine(CoreError::Cancelled) => (
                    "Cancelled".to_string(),
                    CoreError::Cancelled.to_string(),
                    None,
                    EXIT_INCONCLUSIVE,
                ),
                Failure::Engine(e) => match negative_kind(&e) {
                    Some(k) => (k.to_string(), e.to_string(), None, EXIT_NEGATIVE),
                    None => ("InputError".to_string(), e.to_string(), None, EXIT_INPUT),
                },
            };
            report.verdict = kind.clone();
            report.exit_code = exit;
            report.error = Some(ErrorInfo { kind, message, line });
        }
    }
    report
}

fn dispatch(command: Command, p: &Problem, s: &Settings) -> Result<Outcome, Failure> {
    let name = command.to_string();
    match command {
        Command::CheckIntegrability => check_integrability(p, s, &name),
        Command::Curvature => curvature(p, s, &name),
        Command::SopdeCheck => sopde(p, s, &name),
        Command::EulerLagrange => euler_lagrange(p, s, &name),
        Command::Singular => singular(p, s, &name),
        Command::Noether => noether(p, s, &name),
        Command::Integrate => integrate(p, s, &name),
        Command::Residual => residual(p, s, &name),
    }
}

fn check_integrability(p: &Problem, s: &Settings, name: &str) -> Result<Outcome, Failure> {
    let cfg = s.simplify();
    let y = p.multivector(name)?.normalized(&cfg)?;
    let tree = integrability_algorithm(
        &y,
        &IntegrabilityConfig {
            simplify: cfg,
            depth_bound: s.depth,
            ..Default::default()
        },
    )?;
    let leaves = tree.leaves();
    let mut summary = Vec::new();
    for (i, leaf) in leaves.iter().enumerate() {
        let cons: Vec<String> = leaf.constraints.exprs().iter().map(|e| format!("{e} = 0")).collect();
        let mut line = format!(
            "branch {}: {} on {{{}}}",
            i + 1,
            verdict_name(&leaf.verdict),
            cons.join(", ")
        );
        if let Some(w) = &leaf.witness {
            line.push_str(&format!(", witness {w}"));
            if let Some(src) = &leaf.witness_source {
                line.push_str(&format!(" from {src}"));
            }
        }
        if let Some(d) = leaf.dynamical {
            line.push_str(&format!(", dynamical {d}"));
        }
        summary.push(line);
    }
    let inconclusive = leaves.iter().any(|l| l.verdict == BranchVerdict::Inconclusive);
    let exit = if inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        exit_for(tree.verdict() == BranchVerdict::IntegrableEverywhere, tree.confidence)
    };
    Ok(Outcome {
        verdict: verdict_name(&tree.verdict()),
        exit,
        confidence: tree.confidence,
        assumptions: tree.assumptions.clone(),
        result: json!({ "normalized_factors": y.factors(), "tree": tree }),
        summary,
    })
}

fn curvature(p: &Problem, s: &Settings, name: &str) -> Result<Outcome, Failure> {
    let cfg = s.simplify();
    let mut conf = Confidence::Exact;
    let mut nonzero = Vec::new();
    let (kind, table) = match p.connection(name)? {
        ConnectionSpec::Ehresmann(c) => {
            let r = curvature_e(&c);
            let chart = c.chart();
            for (b, block) in r.iter().enumerate() {
                for (mu, row) in block.iter().enumerate() {
                    for (eta, e) in row.iter().enumerate().skip(mu + 1) {
                        let v = is_zero(e, &cfg).map_err(CoreError::from)?;
                        conf = conf.and(v.confidence());
                        if !v.is_zero() {
                            nonzero.push(format!(
                                "R[{}, {}, {}] = {e}",
                                chart.fiber()[b],
                                chart.base()[mu],
                                chart.base()[eta]
                            ));
                        }
                    }
                }
            }
            ("ehresmann", to_value(&r))
        }
        ConnectionSpec::JetField(j) => {
            let r = curvature_j1(&j);
            let chart = j.chart();
            for (b, block) in r.y_block.iter().enumerate() {
                for (mu, row) in block.iter().enumerate() {
                    for (eta, e) in row.iter().enumerate().skip(mu + 1) {
                        let v = is_zero(e, &cfg).map_err(CoreError::from)?;
                        conf = conf.and(v.confidence());
                        if !v.is_zero() {
                            nonzero.push(format!(
                                "R[{}, {}, {}] = {e}",
                                chart.fiber()[b],
                                chart.base()[mu],
                                chart.base()[eta]
                            ));
                        }
                    }
                }
            }
            for (b, block) in r.v_block.iter().enumerate() {
                for (rho, rows) in block.iter().enumerate() {
                    for (mu, row) in rows.iter().enumerate() {
                        for (eta, e) in row.iter().enumerate().skip(mu + 1) {
                            let v = is_zero(e, &cfg).map_err(CoreError::from)?;
                            conf = conf.and(v.confidence());
                            if !v.is_zero() {
                                nonzero.push(format!(
                                    "R[{}, {}, {}] = {e}",
                                    chart.jet_var(b, rho),
                                    chart.base()[mu],
                                    chart.base()[eta]
                                ));
                            }
                        }
                    }
                }
            }
            ("jet-field", to_value(&r))
        }
    };
    let flat = nonzero.is_empty();
    Ok(Outcome {
        verdict: if flat { "Flat" } else { "Curved" }.into(),
        exit: exit_for(flat, conf),
        confidence: conf,
        assumptions: Vec::new(),
        result: json!({ "kind": kind, "curvature": table, "nonzero": nonzero }),
        summary: if flat {
            vec!["all curvature components vanish".into()]
        } else {
            nonzero
        },
    })
}

fn jet_mvf(p: &Problem, name: &str) -> Result<DecomposableMVF, Failure> {
    if p.has("multivector") {
        let y = p.multivector(name)?;
        y.chart().require_jet()?;
        return Ok(y);
    }
    match p.connection(name)? {
        ConnectionSpec::JetField(j) => Ok(jetfield_to_mvf(&j)),
        ConnectionSpec::Ehresmann(_) => Err(InputError::Other(format!(
            "`{name}` needs a multivector block on J1E or F/G entries in the connection block"
        ))
        .into()),
    }
}

fn sopde(p: &Problem, s: &Settings, name: &str) -> Result<Outcome, Failure> {
    let cfg = s.simplify();
    let y = jet_mvf(p, name)?;
    let r = sopde_check(&y, &cfg)?;
    let positive = r.via_f && r.via_theta;
    let mut conf = r.confidence;
    let mut result = json!({ "report": r });
    let mut summary = vec![format!("via F: {}, via contact forms: {}", r.via_f, r.via_theta)];
    if let Some(w) = &r.witness {
        summary.push(format!("F - v does not vanish: {w}"));
    }
    if positive {
        let j = mvf_to_jetfield(&y, &cfg)?;
        let conds = sopde_integrability_conditions(&j, &cfg)?;
        let (holonomic, c) = conds.vanishes(&cfg)?;
        conf = conf.and(c);
        summary.push(format!("integrability conditions vanish: {holonomic}"));
        result["integrability_conditions"] = to_value(&conds);
        result["conditions_vanish"] = json!(holonomic);
    }
    Ok(Outcome {
        verdict: if positive { "Sopde" } else { "NotSopde" }.into(),
        exit: exit_for(positive, conf),
        confidence: conf,
        assumptions: Vec::new(),
        result,
        summary,
    })
}

fn euler_lagrange(p: &Problem, s: &Settings, name: &str) -> Result<Outcome, Failure> {
    let cfg = s.simplify();
    let (l, assignment) = p.lagrangian(name)?;
    let pc = poincare_cartan(&l, &cfg)?;
    let reg = regularity(&l, &cfg)?;
    let sys = el_system(&l);
    let mut conf = pc.confidence.and(reg.confidence);
    let mut assumptions = Vec::new();
    let mut summary = vec![
        format!("regularity: {} (det {})", verdict_name(&reg.verdict), reg.determinant),
        format!("Omega_L = -d Theta_L: {}", pc.consistent),
    ];
    for e in sys.equations() {
        summary.push(format!("equation: {e} = 0"));
    }
    let mut result = json!({
        "theta_l": pc.theta_l,
        "omega_l": pc.omega_l,
        "omega_consistent": pc.consistent,
        "regularity": reg,
        "system": sys,
        "equations": sys.equations(),
    });
    if reg.verdict == RegularityVerdict::Singular {
        summary.push("the Hessian is singular; use the `singular` command".into());
        return Ok(Outcome {
            verdict: "Singular".into(),
            exit: exit_for(false, conf),
            confidence: conf,
            assumptions,
            result,
            summary,
        });
    }
    if reg.verdict == RegularityVerdict::Pointwise {
        assumptions.push(format!("the Hessian determinant {} does not vanish", reg.determinant));
    }
    let fam = solve_regular(&sys, &reg, s.pivot, &cfg)?;
    conf = conf.and(fam.confidence);
    summary.push(format!(
        "pivot policy {}: {} free unknowns ({})",
        fam.policy,
        fam.free_count,
        fam.free.join(", ")
    ));
    for (b, block) in fam.solution.iter().enumerate() {
        for (nu, row) in block.iter().enumerate() {
            for (mu, e) in row.iter().enumerate() {
                let g = multijet_core::lagrangian::g_name(b, nu, mu);
                if fam.pivots.contains(&g) {
                    summary.push(format!("{g} = {e}"));
                }
            }
        }
    }
    let mut positive = pc.consistent && fam.residual_zero;
    let mut verdict = "Solved";
    result["family"] = to_value(&fam);
    if !assignment.is_empty() {
        let r = el_integrability_conditions(&l, &fam, &assignment, &cfg)?;
        conf = conf.and(r.confidence);
        summary.push(format!("integrability conditions vanish: {}", r.all_zero));
        if !r.all_zero {
            verdict = "ConditionsViolated";
        }
        positive &= r.all_zero;
        result["integrability"] = to_value(&r);
    }
    if p.has("section") {
        let phi = p.section(p.jet_chart(), name)?;
        let res = el_residual_on_section(&l, &phi)?;
        let mut zero = true;
        for e in &res {
            let v = is_zero(e, &cfg).map_err(CoreError::from)?;
            conf = conf.and(v.confidence());
            zero &= v.is_zero();
        }
        summary.push(format!(
            "Euler-Lagrange residual on the section: [{}]",
            res.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        ));
        if !zero && verdict == "Solved" {
            verdict = "SectionNotCritical";
        }
        positive &= zero;
        result["section_residual"] = to_value(&res);
    }
    Ok(Outcome {
        verdict: verdict.into(),
        exit: exit_for(positive, conf),
        confidence: conf,
        assumptions,
        result,
        summary,
    })
}

fn singular(p: &Problem, s: &Settings, name: &str) -> Result<Outcome, Failure> {
    let (l, _) = p.lagrangian(name)?;
    let state = singular_algorithm(
        &l,
        &SingularConfig {
            simplify: s.simplify(),
            depth_bound: s.depth,
            mode: s.mode,
            policy: s.pivot,
        },
    )?;
    let mut summary: Vec<String> = state
        .levels
        .iter()
        .map(|lv| {
            let new: Vec<String> = lv.new_constraints.iter().map(ToString::to_string).collect();
            format!(
                "level {} ({}): rank {}, new constraints [{}]",
                lv.level,
                lv.phase,
                lv.rank,
                new.join(", ")
            )
        })
        .collect();
    if let Some(w) = &state.witness {
        summary.push(format!("witness: {w}"));
    }
    if let Some(r) = &state.reason {
        summary.push(format!("reason: {r}"));
    }
    if state.verdict == SingularVerdict::FinalSubmanifold {
        let cons: Vec<String> = state.constraints.exprs().iter().map(|e| format!("{e} = 0")).collect();
        summary.push(format!("final constraints: {{{}}}", cons.join(", ")));
        let free = if state.free.is_empty() {
            "none".to_string()
        } else {
            state.free.join(", ")
        };
        summary.push(format!("free unknowns: {free}"));
    }
    let exit = match state.verdict {
        SingularVerdict::FinalSubmanifold => exit_for(true, state.confidence),
        SingularVerdict::NoSolution => exit_for(false, state.confidence),
        SingularVerdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    Ok(Outcome {
        verdict: verdict_name(&state.verdict),
        exit,
        confidence: state.confidence,
        assumptions: state.assumptions.clone(),
        result: to_value(&state),
        summary,
    })
}

fn noether(p: &Problem, s: &Settings, name: &str) -> Result<Outcome, Failure> {
    let cfg = s.simplify();
    let (l, _) = p.lagrangian(name)?;
    let cand = p.symmetry(name)?;
    let contact = preserves_contact_module(&cand.x, &cfg)?;
    let defect = symmetry_defect(&l, &cand, &cfg)?;
    let mut conf = contact.confidence.and(defect.confidence);
    let positive = contact.preserved && defect.vanishes;
    let mut summary = vec![
        format!("preserves the contact module: {}", contact.preserved),
        format!("symmetry defect: {}", defect.defect),
    ];
    let mut result = json!({ "contact": contact, "defect": defect });
    let check = if s.acknowledge_defect {
        DefectCheck::Acknowledge
    } else {
        DefectCheck::Require
    };
    if defect.vanishes || s.acknowledge_defect {
        let current = conserved_current(&l, &cand, check, &cfg)?;
        summary.push(format!("current: {}", current.current));
        result["current"] = to_value(&current.current);
        if p.has("section") {
            let phi = p.section(p.jet_chart(), name)?;
            let r = current_closed_on_section(&current, &phi)?;
            let el = el_residual_on_section(&l, &phi)?;
            let v = is_zero(&r, &cfg).map_err(CoreError::from)?;
            conf = conf.and(v.confidence());
            summary.push(format!("d(current) on the section: {r}"));
            result["closedness_residual"] = to_value(&r);
            result["closed_on_section"] = json!(v.is_zero());
            result["el_residual"] = to_value(&el);
        }
    }
    Ok(Outcome {
        verdict: if positive { "Symmetry" } else { "NotSymmetry" }.into(),
        exit: exit_for(positive, conf),
        confidence: conf,
        assumptions: Vec::new(),
        result,
        summary,
    })
}

fn bind_field(p: &Problem, f: &VectorField) -> Result<VectorField, Failure> {
    let comps = f
        .components()
        .iter()
        .map(|e| p.bind_params(e))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VectorField::from_components(f.chart(), comps)?)
}

fn flow_settings(p: &Problem, s: &Settings) -> Result<crate::problem::NumericSpec, Failure> {
    let mut spec = p.numeric()?;
    if let Some(t) = s.tolerance {
        spec.flow.residual_tolerance = t;
        spec.flow.commutation_tolerance = t;
    }
    spec.flow.validate()?;
    Ok(spec)
}

fn integrate(p: &Problem, s: &Settings, name: &str) -> Result<Outcome, Failure> {
    let cfg = s.simplify();
    let raw = if p.has("multivector") {
        p.multivector(name)?
    } else {
        jet_mvf(p, name)?
    };
    let factors = raw
        .factors()
        .iter()
        .map(|f| bind_field(p, f))
        .collect::<Result<Vec<_>, _>>()?;
    let y = DecomposableMVF::new(raw.chart(), factors)?.normalized(&cfg)?;
    let chart = y.chart().clone();
    let spec = flow_settings(p, s)?;
    let p0 = spec
        .p0
        .clone()
        .ok_or_else(|| InputError::Other("numeric block lacks `p0`".into()))?;
    if p0.len() != chart.dim() {
        return Err(InputError::Other(format!(
            "`p0` has {} entries, expected {} ({})",
            p0.len(),
            chart.dim(),
            chart.coords().join(", ")
        ))
        .into());
    }
    let tree = integrability_algorithm(
        &y,
        &IntegrabilityConfig {
            simplify: cfg,
            depth_bound: s.depth,
            ..Default::default()
        },
    )?;
    let coords = chart.coords();
    let mut chosen = None;
    for leaf in tree.leaves() {
        if !matches!(
            leaf.verdict,
            BranchVerdict::IntegrableEverywhere | BranchVerdict::IntegrableOnSubmanifold
        ) {
            continue;
        }
        let mut inside = true;
        for k in leaf.constraints.exprs() {
            let f =
                CompiledExpr::compile(&k, &coords).map_err(|u| InputError::Other(format!("`{}` has no value", u.0)))?;
            inside &= f.eval(&p0).abs() <= spec.flow.residual_tolerance;
        }
        if inside {
            chosen = Some(leaf);
            break;
        }
    }
    let Some(leaf) = chosen else {
        let inconclusive = tree.leaves().iter().any(|l| l.verdict == BranchVerdict::Inconclusive);
        return Ok(Outcome {
            verdict: if inconclusive {
                "Inconclusive"
            } else {
                "NoIntegrableBranch"
            }
            .into(),
            exit: if inconclusive { EXIT_INCONCLUSIVE } else { EXIT_NEGATIVE },
            confidence: Confidence::Numeric,
            assumptions: tree.assumptions.clone(),
            result: json!({ "p0": p0, "tree": tree }),
            summary: vec!["the initial point lies on no integrable branch".into()],
        });
    };
    let constraints = leaf.constraints.exprs();
    let grid = BaseGrid::uniform(&spec.bounds, spec.nodes)?;
    let sec = integrate_m_flow(&y, &constraints, &p0, &grid, &spec.flow)?;
    let deviation = check_flow_commutation(&y, &p0, spec.t, spec.s, &spec.flow)?;
    let commutes = deviation <= spec.flow.commutation_tolerance;
    let mut summary = vec![
        format!(
            "branch: {{{}}}",
            constraints
                .iter()
                .map(|e| format!("{e} = 0"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        format!(
            "grid: {:?} nodes, step {}, order {}",
            grid.shape(),
            spec.flow.h,
            spec.flow.order
        ),
        format!("flow commutation deviation at p0: {deviation:e}"),
    ];
    let mut positive = commutes;
    let mut verdict = if commutes { "Integrated" } else { "NotCommuting" };
    let mut result = json!({
        "p0": p0,
        "branch": constraints,
        "grid_shape": grid.shape(),
        "h": spec.flow.h,
        "order": spec.flow.order,
        "commutation_deviation": deviation,
        "commutes": commutes,
    });
    let ranges: Vec<Value> = sec
        .names()
        .iter()
        .map(|n| {
            let col = sec.column(n).expect("own column");
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            json!({ "name": n, "min": lo, "max": hi })
        })
        .collect();
    result["ranges"] = json!(ranges);
    if p.has("section") {
        let phi = p.section(&chart, name)?;
        let exact = phi
            .f()
            .iter()
            .map(|e| p.bind_params(e))
            .collect::<Result<Vec<_>, _>>()?;
        let pairs: Vec<(&str, Expr)> = chart.fiber().iter().map(String::as_str).zip(exact).collect();
        let err = sec.max_error(&pairs)?;
        let ok = err <= spec.flow.residual_tolerance;
        summary.push(format!("max error against the section block: {err:e}"));
        result["max_error"] = json!(err);
        result["matches_section"] = json!(ok);
        if !ok && positive {
            verdict = "MismatchesSection";
        }
        positive &= ok;
    }
    if let Some(path) = &s.csv {
        std::fs::write(path, sec.to_csv()?).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        summary.push(format!("section written to {}", path.display()));
        result["csv"] = json!(path.display().to_string());
    }
    Ok(Outcome {
        verdict: verdict.into(),
        exit: if positive { EXIT_POSITIVE } else { EXIT_NEGATIVE },
        confidence: Confidence::Numeric,
        assumptions: tree.assumptions.clone(),
        result,
        summary,
    })
}

fn bind_lagrangian(p: &Problem, l: &Lagrangian) -> Result<Lagrangian, Failure> {
    Ok(Lagrangian::new(l.chart(), p.bind_params(l.density())?)?)
}

fn bind_jet_field(p: &Problem, j: &JetFieldJ1) -> Result<JetFieldJ1, Failure> {
    let f = j
        .f()
        .iter()
        .map(|r| r.iter().map(|e| p.bind_params(e)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let g = j
        .g()
        .iter()
        .map(|b| {
            b.iter()
                .map(|r| r.iter().map(|e| p.bind_params(e)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(JetFieldJ1::new(j.chart(), f, g)?)
}

fn residual(p: &Problem, s: &Settings, name: &str) -> Result<Outcome, Failure> {
    let spec = flow_settings(p, s)?;
    let (l, j) = if p.has("lagrangian") {
        (Some(bind_lagrangian(p, &p.lagrangian(name)?.0)?), None)
    } else {
        match p.connection(name) {
            Ok(ConnectionSpec::JetField(j)) => (None, Some(bind_jet_field(p, &j)?)),
            Ok(ConnectionSpec::Ehresmann(_)) => {
                return Err(
                    InputError::Other("`residual` needs a lagrangian block or F/G jet-field entries".into()).into(),
                )
            }
            Err(InputError::MissingBlock { .. }) => {
                return Err(InputError::MissingBlock {
                    block: "lagrangian".into(),
                    command: name.into(),
                }
                .into())
            }
            Err(e) => return Err(e.into()),
        }
    };
    let target = match (&l, &j) {
        (Some(l), _) => ResidualTarget::Lagrangian(l),
        (_, Some(j)) => ResidualTarget::JetField(j),
        _ => unreachable!("one target is always built"),
    };
    let chart = p.jet_chart();
    let sec = match &s.csv {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            NumericSection::from_csv(&text, chart.m())?
        }
        None => {
            let phi = p.section(chart, name)?;
            let bound = phi
                .f()
                .iter()
                .map(|e| p.bind_params(e))
                .collect::<Result<Vec<_>, _>>()?;
            let phi = multijet_core::jet::Section::new(chart, bound)?;
            NumericSection::sample(&phi, &BaseGrid::uniform(&spec.bounds, spec.nodes)?)?
        }
    };
    let r = numeric_residual(target, &sec, &spec.flow)?;
    let ok = r <= spec.flow.residual_tolerance;
    Ok(Outcome {
        verdict: if ok { "WithinTolerance" } else { "ExceedsTolerance" }.into(),
        exit: if ok { EXIT_POSITIVE } else { EXIT_NEGATIVE },
        confidence: Confidence::Numeric,
        assumptions: Vec::new(),
        result: json!({
            "target": if l.is_some() { "euler-lagrange" } else { "jet-field" },
            "max_residual": r,
            "tolerance": spec.flow.residual_tolerance,
            "grid_shape": sec.grid().shape(),
        }),
        summary: vec![format!(
            "max residual {r:e} over {:?} nodes (tolerance {:e})",
            sec.grid().shape(),
            spec.flow.residual_tolerance
        )],
    })
}
