//! Engine objects built from the blocks of a problem file.

use std::collections::HashMap;
use std::sync::Arc;

use multijet_core::geometry::ChartSpec;
use multijet_core::jet::{AdaptedForm, ConnectionE, JetFieldJ1, Section};
use multijet_core::lagrangian::Lagrangian;
use multijet_core::noether::SymmetryCandidate;
use multijet_core::numeric::FlowConfig;
use multijet_core::{DecomposableMVF, Expr, VectorField};
use thiserror::Error;

use crate::dsl::{parse_problem, Block, DslError, ProblemFile, Stmt};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InputError {
    #[error("line {line}: {message}")]
    At { line: usize, message: String },
    #[error("missing `{block}` block (required by `{command}`)")]
    MissingBlock { block: String, command: String },
    #[error("{0}")]
    Other(String),
}

impl InputError {
    pub fn line(&self) -> Option<usize> {
        match self {
            InputError::At { line, .. } => Some(*line),
            _ => None,
        }
    }
}

impl From<DslError> for InputError {
    fn from(e: DslError) -> Self {
        InputError::At {
            line: e.line,
            message: e.message,
        }
    }
}

fn at(line: usize, message: impl ToString) -> InputError {
    InputError::At {
        line,
        message: message.to_string(),
    }
}

/// A connection block holds either Γ or F/G tables.
#[derive(Debug, Clone)]
pub enum ConnectionSpec {
    Ehresmann(ConnectionE),
    JetField(JetFieldJ1),
}

/// Settings of the numeric block.
#[derive(Debug, Clone)]
pub struct NumericSpec {
    pub flow: FlowConfig,
    pub bounds: Vec<(f64, f64)>,
    pub nodes: usize,
    pub p0: Option<Vec<f64>>,
    pub t: f64,
    pub s: f64,
}

#[derive(Debug, Clone)]
pub struct Problem {
    file: ProblemFile,
    chart: Arc<ChartSpec>,
    jet: Arc<ChartSpec>,
    params: HashMap<String, Expr>,
}

fn name_list(stmt: &Stmt) -> Result<Vec<String>, InputError> {
    let v = stmt.value.trim();
    let inner = v
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| at(stmt.line, format!("`{}` must be a list like [x1, x2]", stmt.key)))?;
    Ok(inner
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect())
}

impl Problem {
    pub fn parse(text: &str) -> Result<Problem, InputError> {
        let file = parse_problem(text)?;
        let bundle = file.block("bundle").expect("parser enforces one bundle block");
        for s in &bundle.stmts {
            if !["base", "fiber", "params"].contains(&s.key.as_str()) || !s.index.is_empty() {
                return Err(at(s.line, format!("unknown bundle entry `{}`", s.key)));
            }
        }
        let list = |key: &str| -> Result<Vec<String>, InputError> {
            match bundle.get(key) {
                Some(s) => name_list(s),
                None if key == "params" => Ok(Vec::new()),
                None => Err(at(bundle.line, format!("bundle block lacks `{key}`"))),
            }
        };
        let (base, fiber, params) = (list("base")?, list("fiber")?, list("params")?);
        let chart = ChartSpec::new(base, fiber)
            .and_then(|c| c.with_params(params.clone()))
            .map_err(|e| at(bundle.line, e))?;
        let jet = Arc::new(chart.clone().with_jet().map_err(|e| at(bundle.line, e))?);
        let chart = Arc::new(chart);
        let mut problem = Problem {
            file,
            chart,
            jet,
            params: HashMap::new(),
        };
        if let Some(block) = problem.file.block("numeric") {
            for s in &block.stmts {
                if params.contains(&s.key) {
                    let e = problem.expr(&problem.chart, s)?;
                    if !e.free_vars().is_empty() {
                        return Err(at(s.line, format!("value of parameter `{}` must be a constant", s.key)));
                    }
                    problem.params.insert(s.key.clone(), e);
                }
            }
        }
        Ok(problem)
    }

    pub fn file(&self) -> &ProblemFile {
        &self.file
    }

    /// The bundle chart (base and fiber).
    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    /// The first jet chart.
    pub fn jet_chart(&self) -> &Arc<ChartSpec> {
        &self.jet
    }

    pub fn has(&self, block: &str) -> bool {
        self.file.block(block).is_some()
    }

    pub fn require(&self, block: &str, command: &str) -> Result<&Block, InputError> {
        self.file.block(block).ok_or_else(|| InputError::MissingBlock {
            block: block.to_string(),
            command: command.to_string(),
        })
    }

    /// Numeric values of the declared parameters, as set in the numeric block.
    pub fn bind_params(&self, e: &Expr) -> Result<Expr, InputError> {
        if self.params.is_empty() {
            return Ok(e.clone());
        }
        e.subs(&self.params).map_err(|err| InputError::Other(err.to_string()))
    }

    fn expr(&self, chart: &ChartSpec, s: &Stmt) -> Result<Expr, InputError> {
        chart.parse(&s.value).map_err(|e| at(s.line, e))
    }

    /// Parses `a*d/dx1 + b*d/dy1`; the result must be linear in the d/d symbols.
    pub fn field(&self, chart: &Arc<ChartSpec>, s: &Stmt) -> Result<VectorField, InputError> {
        let text = &s.value;
        let coords = chart.coords();
        let mut rewritten = String::new();
        let mut used: Vec<usize> = Vec::new();
        let bytes = text.as_bytes();
        let ident = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
        let mut i = 0;
        while i < bytes.len() {
            if text[i..].starts_with("d/d") && (i == 0 || !ident(bytes[i - 1])) {
                let start = i + 3;
                let mut end = start;
                while end < bytes.len() && ident(bytes[end]) {
                    end += 1;
                }
                let name = &text[start..end];
                let k = coords
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| at(s.line, format!("unknown coordinate in `d/d{name}`")))?;
                rewritten.push_str(&format!("Dpartial{k}"));
                if !used.contains(&k) {
                    used.push(k);
                }
                i = end;
            } else {
                rewritten.push(bytes[i] as char);
                i += 1;
            }
        }
        let marker = |k: usize| format!("Dpartial{k}");
        if coords.iter().chain(chart.params()).any(|c| c.starts_with("Dpartial")) {
            return Err(at(s.line, "coordinate names may not start with `Dpartial`"));
        }
        let e = multijet_core::symcore::parse_with(&rewritten, &|n| {
            chart.is_declared(n) || used.iter().any(|&k| marker(k) == n)
        })
        .map_err(|e| at(s.line, e))?;
        let mut comps = vec![Expr::zero(); coords.len()];
        let mut rest = e.clone();
        let zeros: HashMap<String, Expr> = used.iter().map(|&k| (marker(k), Expr::zero())).collect();
        for &k in &used {
            let c = e.diff(&marker(k));
            if used.iter().any(|&j| c.contains_var(&marker(j))) {
                return Err(at(s.line, "field is not linear in the d/d symbols"));
            }
            comps[k] = c;
        }
        rest = rest.subs(&zeros).map_err(|e| at(s.line, e))?;
        if !rest.is_exact_zero() {
            return Err(at(s.line, format!("term `{rest}` has no d/d factor")));
        }
        VectorField::from_components(chart, comps).map_err(|e| at(s.line, e))
    }

    fn uses_jet(&self, stmts: &[&Stmt]) -> bool {
        let jets: Vec<&String> = self.jet.jet_names().into_iter().flatten().flatten().collect();
        stmts.iter().any(|s| {
            jets.iter().any(|j| {
                s.value
                    .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .any(|tok| tok == j.as_str() || tok == format!("d{j}"))
            })
        })
    }

    /// Factors of the multivector block, on E or on J¹E when jet coordinates appear.
    pub fn multivector(&self, command: &str) -> Result<DecomposableMVF, InputError> {
        let block = self.require("multivector", command)?;
        if block.stmts.is_empty() {
            return Err(at(block.line, "multivector block defines no factor fields"));
        }
        let stmts: Vec<&Stmt> = block.stmts.iter().collect();
        let chart = if self.uses_jet(&stmts) { &self.jet } else { &self.chart };
        let factors = stmts
            .iter()
            .map(|s| self.field(chart, s))
            .collect::<Result<Vec<_>, _>>()?;
        DecomposableMVF::new(chart, factors).map_err(|e| at(block.line, e))
    }

    pub fn connection(&self, command: &str) -> Result<ConnectionSpec, InputError> {
        let block = self.require("connection", command)?;
        let has = |k: &str| block.stmts.iter().any(|s| s.key == k);
        if let Some(s) = block
            .stmts
            .iter()
            .find(|s| !["Gamma", "F", "G"].contains(&s.key.as_str()))
        {
            return Err(at(
                s.line,
                format!("unknown connection entry `{}` (use Gamma, F or G)", s.key),
            ));
        }
        if has("Gamma") && (has("F") || has("G")) {
            return Err(at(block.line, "a connection block holds either Gamma or F/G entries"));
        }
        if block.stmts.is_empty() {
            return Err(at(block.line, "connection block has no entries"));
        }
        let (m, n) = (self.chart.m(), self.chart.n());
        let fiber = |s: &Stmt, i: usize| -> Result<usize, InputError> {
            self.chart
                .fiber()
                .iter()
                .position(|y| *y == s.index[i])
                .ok_or_else(|| at(s.line, format!("`{}` is not a fiber coordinate", s.index[i])))
        };
        let base = |s: &Stmt, i: usize| -> Result<usize, InputError> {
            self.chart
                .base()
                .iter()
                .position(|x| *x == s.index[i])
                .ok_or_else(|| at(s.line, format!("`{}` is not a base coordinate", s.index[i])))
        };
        let arity = |s: &Stmt, k: usize| -> Result<(), InputError> {
            if s.index.len() != k {
                return Err(at(s.line, format!("`{}` takes {k} indices", s.key)));
            }
            Ok(())
        };
        if has("Gamma") {
            let mut gamma = vec![vec![Expr::zero(); m]; n];
            for s in &block.stmts {
                arity(s, 2)?;
                gamma[fiber(s, 0)?][base(s, 1)?] = self.expr(&self.chart, s)?;
            }
            return ConnectionE::new(&self.chart, gamma)
                .map(ConnectionSpec::Ehresmann)
                .map_err(|e| at(block.line, e));
        }
        let mut f: Option<Vec<Vec<Expr>>> = None;
        let mut g = vec![vec![vec![Expr::zero(); m]; m]; n];
        for s in &block.stmts {
            if s.key == "F" {
                arity(s, 2)?;
                let table = f.get_or_insert_with(|| {
                    (0..n)
                        .map(|a| (0..m).map(|mu| Expr::var(self.jet.jet_var(a, mu))).collect())
                        .collect()
                });
                table[fiber(s, 0)?][base(s, 1)?] = self.expr(&self.jet, s)?;
            } else {
                arity(s, 3)?;
                g[fiber(s, 0)?][base(s, 1)?][base(s, 2)?] = self.expr(&self.jet, s)?;
            }
        }
        let j = match f {
            Some(f) => JetFieldJ1::new(&self.jet, f, g),
            None => JetFieldJ1::sopde(&self.jet, g),
        };
        j.map(ConnectionSpec::JetField).map_err(|e| at(block.line, e))
    }

    /// The density `L = ...` and the assignments of free unknowns given next to it.
    pub fn lagrangian(&self, command: &str) -> Result<(Lagrangian, HashMap<String, Expr>), InputError> {
        let block = self.require("lagrangian", command)?;
        let s = block
            .get("L")
            .ok_or_else(|| at(block.line, "lagrangian block lacks `L = ...`"))?;
        let l = Lagrangian::new(&self.jet, self.expr(&self.jet, s)?).map_err(|e| at(s.line, e))?;
        let mut assignment = HashMap::new();
        for t in block.stmts.iter().filter(|t| t.key != "L") {
            if !t.index.is_empty() || !(t.key.starts_with('G') || t.key.starts_with('F')) {
                return Err(at(t.line, format!("unexpected lagrangian entry `{}`", t.key)));
            }
            assignment.insert(t.key.clone(), self.expr(&self.jet, t)?);
        }
        Ok((l, assignment))
    }

    /// `X = ...` on J¹E or `Z = ...` on E (prolonged), plus `xi[...] = ...` coefficients.
    pub fn symmetry(&self, command: &str) -> Result<SymmetryCandidate, InputError> {
        let block = self.require("symmetry", command)?;
        let x = match (block.get("X"), block.get("Z")) {
            (Some(s), None) => self.field(&self.jet, s)?,
            (None, Some(s)) => {
                let z = self.field(&self.jet, s)?;
                multijet_core::jet::prolong_vector_field(&z).map_err(|e| at(s.line, e))?
            }
            _ => {
                return Err(at(
                    block.line,
                    "symmetry block needs exactly one of `X = ...` or `Z = ...`",
                ))
            }
        };
        let m = self.jet.m();
        let mut xi = AdaptedForm::zero(&self.jet, m - 1);
        for s in block.stmts.iter().filter(|s| s.key == "xi") {
            if s.index.len() != m - 1 {
                return Err(at(
                    s.line,
                    format!("`xi` is an {}-form and takes {} indices", m - 1, m - 1),
                ));
            }
            let idx = s
                .index
                .iter()
                .map(|n| {
                    self.jet
                        .index_of(n)
                        .ok_or_else(|| at(s.line, format!("unknown coordinate `{n}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let term = AdaptedForm::basis(&self.jet, idx, self.expr(&self.jet, s)?);
            xi = xi.add(&term).map_err(|e| at(s.line, e))?;
        }
        if let Some(s) = block.stmts.iter().find(|s| !["X", "Z", "xi"].contains(&s.key.as_str())) {
            return Err(at(s.line, format!("unknown symmetry entry `{}`", s.key)));
        }
        SymmetryCandidate::new(x, xi).map_err(|e| at(block.line, e))
    }

    /// The section block over the given chart (E or J¹E share base and fiber).
    pub fn section(&self, chart: &Arc<ChartSpec>, command: &str) -> Result<Section, InputError> {
        let block = self.require("section", command)?;
        let mut f = Vec::new();
        for y in chart.fiber() {
            let s = block
                .get(y)
                .ok_or_else(|| at(block.line, format!("section block lacks `{y} = ...`")))?;
            f.push(self.expr(chart, s)?);
        }
        if let Some(s) = block.stmts.iter().find(|s| !chart.fiber().contains(&s.key)) {
            return Err(at(s.line, format!("`{}` is not a fiber coordinate", s.key)));
        }
        Section::new(chart, f).map_err(|e| at(block.line, e))
    }

    pub fn numeric(&self) -> Result<NumericSpec, InputError> {
        let mut spec = NumericSpec {
            flow: FlowConfig::default(),
            bounds: vec![(0.0, 1.0); self.chart.m()],
            nodes: 11,
            p0: None,
            t: 0.1,
            s: 0.1,
        };
        let Some(block) = self.file.block("numeric") else {
            return Ok(spec);
        };
        fn json<T: serde::de::DeserializeOwned>(s: &Stmt) -> Result<T, InputError> {
            serde_json::from_str(&s.value).map_err(|e| at(s.line, format!("bad value for `{}`: {e}", s.key)))
        }
        for s in &block.stmts {
            match s.key.as_str() {
                "h" => spec.flow.h = json(s)?,
                "order" => spec.flow.order = json(s)?,
                "commutation_tolerance" => spec.flow.commutation_tolerance = json(s)?,
                "residual_tolerance" => spec.flow.residual_tolerance = json(s)?,
                "box" => spec.bounds = json(s)?,
                "nodes" => spec.nodes = json(s)?,
                "p0" => spec.p0 = Some(json(s)?),
                "t" => spec.t = json(s)?,
                "s" => spec.s = json(s)?,
                k if self.params.contains_key(k) => {}
                k => return Err(at(s.line, format!("unknown numeric entry `{k}`"))),
            }
        }
        if spec.bounds.len() != self.chart.m() {
            return Err(at(block.line, format!("`box` needs {} intervals", self.chart.m())));
        }
        spec.flow.validate().map_err(|e| at(block.line, e))?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "bundle { base = [x1, x2]; fiber = [y1, y2] }\nmultivector {\n  Y1 = d/dx1 + (y1 - x1 - x2) * d/dy1 + (x1 + x2 - y2)*d/dy2\n  Y2 = d/dx2 + (y1^2 - (x1 + x2)^2 - 2*(x1 + x2)) * d/dy1 + d/dy2\n}\n";

    #[test]
    fn fields_from_dsl() {
        let p = Problem::parse(EXAMPLE).unwrap();
        let y = p.multivector("check-integrability").unwrap();
        assert!(!y.chart().has_jet());
        let c = y.chart();
        assert_eq!(
            y.factors()[0].component_of("y2").unwrap(),
            &c.parse("x1 + x2 - y2").unwrap()
        );
        assert_eq!(y.factors()[1].component_of("x2").unwrap(), &Expr::one());
    }

    #[test]
    fn field_errors() {
        let bad = EXAMPLE.replace("+ d/dy2\n}", "+ y2\n}");
        assert!(matches!(
            Problem::parse(&bad).unwrap().multivector("x"),
            Err(InputError::At { line: 4, .. })
        ));
        let nonlinear = EXAMPLE.replace("+ d/dy2\n}", "+ d/dy2*d/dy1\n}");
        assert!(Problem::parse(&nonlinear).unwrap().multivector("x").is_err());
        let unknown = EXAMPLE.replace("d/dy2\n}", "d/dz\n}");
        assert!(Problem::parse(&unknown).unwrap().multivector("x").is_err());
        let empty = "bundle { base = [x]; fiber = [y] }\nmultivector { }\n";
        assert!(Problem::parse(empty).unwrap().multivector("x").is_err());
    }

    #[test]
    fn jet_fields_and_connections() {
        let p = Problem::parse(
            "bundle { base = [x0, x1]; fiber = [y] }\nmultivector {\n X0 = d/dx0 + vy_0*d/dy + d/dvy_0\n X1 = d/dx1 + vy_1*d/dy\n}\nconnection { G[y, x0, x0] = 2; G[y, x1, x1] = -2 }\n",
        )
        .unwrap();
        assert!(p.multivector("x").unwrap().chart().has_jet());
        match p.connection("x").unwrap() {
            ConnectionSpec::JetField(j) => {
                assert_eq!(j.g()[0][1][1], Expr::int(-2));
                assert_eq!(j.f()[0][1], Expr::var("vy_1"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn numeric_block() {
        let p = Problem::parse(
            "bundle { base = [x1, x2]; fiber = [y1, y2]; params = [c] }\nnumeric {\n h = 1e-3\n box = [[0, 1], [0, 2]]\n p0 = [0, 0, 1, 1]\n c = 2\n}\n",
        )
        .unwrap();
        let n = p.numeric().unwrap();
        assert_eq!(n.bounds, vec![(0.0, 1.0), (0.0, 2.0)]);
        assert_eq!(n.p0, Some(vec![0.0, 0.0, 1.0, 1.0]));
        let e = p.chart().parse("c*x1").unwrap();
        assert_eq!(p.bind_params(&e).unwrap(), p.chart().parse("2*x1").unwrap());
    }
}
