use std::sync::Arc;

use multijet_core::geometry::{involutivity_defect, ChartSpec, DecomposableMVF, VectorField};
use multijet_core::jet::{
    connection_section_residual, contact_forms, curvature_e, curvature_j1, holonomy_check, integral_section_residual,
    jetfield_to_mvf, mvf_to_jetfield, prolong_section, prolong_vector_field, sopde_check,
    sopde_integrability_conditions, AdaptedForm, ConnectionE, JetFieldJ1, JetSection, Section,
};
use multijet_core::{Error, Expr, SimplifyConfig};
use proptest::prelude::*;

fn cfg() -> SimplifyConfig {
    SimplifyConfig::default()
}

fn jet_chart(base: &[&str], fiber: &[&str]) -> Arc<ChartSpec> {
    Arc::new(
        ChartSpec::new(base.iter().copied(), fiber.iter().copied())
            .unwrap()
            .with_jet()
            .unwrap(),
    )
}

fn e(c: &ChartSpec, s: &str) -> Expr {
    c.parse(s).unwrap()
}

fn zero_g(m: usize, n: usize) -> Vec<Vec<Vec<Expr>>> {
    vec![vec![vec![Expr::zero(); m]; m]; n]
}

#[test]
fn curvature_e_examples() {
    let c = Arc::new(ChartSpec::new(["x1", "x2"], ["y"]).unwrap());
    let flat = ConnectionE::new(&c, vec![vec![Expr::zero(), Expr::zero()]]).unwrap();
    assert!(curvature_e(&flat).iter().flatten().flatten().all(Expr::is_exact_zero));

    let h = e(&c, "x1^3*x2 + x2^2");
    let grad = ConnectionE::new(&c, vec![vec![h.diff("x1"), h.diff("x2")]]).unwrap();
    assert!(curvature_e(&grad).iter().flatten().flatten().all(Expr::is_exact_zero));

    let g = ConnectionE::new(&c, vec![vec![e(&c, "y"), Expr::zero()]]).unwrap();
    assert!(curvature_e(&g).iter().flatten().flatten().all(Expr::is_exact_zero));

    let g = ConnectionE::new(&c, vec![vec![e(&c, "x2"), Expr::zero()]]).unwrap();
    let r = curvature_e(&g);
    assert_eq!(r[0][0][1], Expr::int(-1));
    assert_eq!(r[0][1][0], Expr::int(1));

    let g = ConnectionE::new(&c, vec![vec![e(&c, "y"), e(&c, "x1*y")]]).unwrap();
    let r = curvature_e(&g);
    assert_eq!(r[0][0][1], e(&c, "y"));
    assert!(ConnectionE::new(&c, vec![vec![e(&c, "y"), e(&c, "x1")], vec![]]).is_err());
}

#[test]
fn curvature_j1_examples() {
    let c = jet_chart(&["x0", "x1"], &["y"]);
    let j = JetFieldJ1::sopde(&c, zero_g(2, 1)).unwrap();
    assert!(curvature_j1(&j).entries().all(Expr::is_exact_zero));

    let k = Expr::rational(3, 2);
    let g = vec![vec![vec![k.clone(), Expr::zero()], vec![Expr::zero(), -&k]]];
    let j = JetFieldJ1::sopde(&c, g).unwrap();
    assert!(curvature_j1(&j).entries().all(Expr::is_exact_zero));

    let g = vec![vec![vec![e(&c, "y"), Expr::zero()], vec![Expr::zero(), Expr::zero()]]];
    let j = JetFieldJ1::sopde(&c, g).unwrap();
    let curv = curvature_j1(&j);
    // v-block[B][rho=0][mu=0][eta=1] = X0(G_10,0) - X1(G_00,0) = -vy_1
    assert_eq!(curv.v_block[0][0][0][1], e(&c, "-vy_1"));
    assert!(!curv.vanishes(&cfg()).unwrap().0);
}

#[test]
fn dictionary_round_trip_and_scaling() {
    let c = jet_chart(&["x1", "x2"], &["y1"]);
    let f = vec![vec![e(&c, "v1_1 + y1"), e(&c, "x1*v1_2")]];
    let g = vec![vec![vec![e(&c, "x2"), e(&c, "1")], vec![e(&c, "y1^2"), e(&c, "v1_1")]]];
    let j = JetFieldJ1::new(&c, f, g).unwrap();
    let y = jetfield_to_mvf(&j);
    y.check_normalized().unwrap();
    assert_eq!(mvf_to_jetfield(&y, &cfg()).unwrap(), j);

    let s1 = e(&c, "1 + x1^2");
    let s2 = e(&c, "2 + y1^2");
    let scaled = DecomposableMVF::new(&c, vec![y.factors()[0].scale(&s1), y.factors()[1].scale(&s2)]).unwrap();
    assert_eq!(mvf_to_jetfield(&scaled, &cfg()).unwrap(), j);

    let mixed = DecomposableMVF::new(
        &c,
        vec![y.factors()[0].add(&y.factors()[1]).unwrap(), y.factors()[1].clone()],
    )
    .unwrap();
    assert_eq!(mvf_to_jetfield(&mixed, &cfg()).unwrap(), j);

    let vertical = DecomposableMVF::new(
        &c,
        vec![
            VectorField::coordinate(&c, "y1").unwrap(),
            VectorField::coordinate(&c, "x2").unwrap(),
        ],
    )
    .unwrap();
    assert!(matches!(
        mvf_to_jetfield(&vertical, &cfg()),
        Err(Error::NotTransverse(_))
    ));
}

#[test]
fn contact_form_examples() {
    let c = jet_chart(&["x"], &["y"]);
    let th = contact_forms(&c).unwrap();
    assert_eq!(th.len(), 1);
    assert_eq!(th[0].coefficient(&["y"]).unwrap(), Expr::one());
    assert_eq!(th[0].coefficient(&["x"]).unwrap(), e(&c, "-vy_x"));
    assert_eq!(th[0].terms().count(), 2);

    let c = jet_chart(&["x1", "x2"], &["y1", "y2"]);
    let th = contact_forms(&c).unwrap();
    assert_eq!(th.len(), 2);
    for (a, t) in th.iter().enumerate() {
        let y = format!("y{}", a + 1);
        assert_eq!(t.terms().count(), 3);
        assert_eq!(t.coefficient(&[y.as_str()]).unwrap(), Expr::one());
        for mu in 1..=2 {
            let x = format!("x{mu}");
            assert_eq!(
                t.coefficient(&[x.as_str()]).unwrap(),
                -Expr::var(&format!("v{}_{mu}", a + 1))
            );
        }
    }
}

#[test]
fn forms_algebra() {
    let c = jet_chart(&["x"], &["y"]);
    let dx = AdaptedForm::differential(&c, "x").unwrap();
    let dy = AdaptedForm::differential(&c, "y").unwrap();
    let w = dx.wedge(&dy).unwrap();
    assert_eq!(w.coefficient(&["y", "x"]).unwrap(), Expr::int(-1));
    assert!(w.wedge(&dx).unwrap().is_exact_zero());
    let f = AdaptedForm::function(&c, e(&c, "x*y^2"));
    let ddf = f.d().d();
    assert!(ddf.is_exact_zero());
    let one = f.d().scale(&e(&c, "vy_x")).d();
    assert!(one.d().is_exact_zero());
    let x = VectorField::coordinate(&c, "y").unwrap();
    assert_eq!(w.interior(&x).unwrap().coefficient(&["x"]).unwrap(), Expr::int(-1));
}

#[test]
fn sopde_check_examples() {
    let c = jet_chart(&["x1", "x2"], &["y1"]);
    let g = vec![vec![vec![e(&c, "y1"), e(&c, "x1")], vec![e(&c, "x1"), e(&c, "v1_1")]]];
    let j = JetFieldJ1::sopde(&c, g.clone()).unwrap();
    let r = sopde_check(&jetfield_to_mvf(&j), &cfg()).unwrap();
    assert!(r.via_f && r.via_theta);

    let f = vec![vec![e(&c, "v1_1 + 1"), e(&c, "v1_2")]];
    let j = JetFieldJ1::new(&c, f, g.clone()).unwrap();
    let r = sopde_check(&jetfield_to_mvf(&j), &cfg()).unwrap();
    assert!(!r.via_f && !r.via_theta);
    assert_eq!(r.witness, Some(Expr::one()));

    let j = JetFieldJ1::sopde(&c, g).unwrap();
    let y = jetfield_to_mvf(&j);
    let scaled = DecomposableMVF::new(
        &c,
        vec![
            y.factors()[0].scale(&e(&c, "1 + x1^2")),
            y.factors()[1].scale(&e(&c, "1 + v1_2^2")),
        ],
    )
    .unwrap();
    let r = sopde_check(&scaled, &cfg()).unwrap();
    assert!(r.via_f && r.via_theta);
}

#[test]
fn prolongation_and_holonomy() {
    let c = jet_chart(&["x1", "x2"], &["y1"]);
    let phi = Section::new(&c, vec![e(&c, "x1 + x2 + 1")]).unwrap();
    let psi = prolong_section(&phi).unwrap();
    assert_eq!(psi.g()[0], vec![Expr::one(), Expr::one()]);
    assert!(holonomy_check(&psi, &cfg()).unwrap());

    let phi = Section::new(&c, vec![e(&c, "7/3")]).unwrap();
    let psi = prolong_section(&phi).unwrap();
    assert!(psi.g()[0].iter().all(Expr::is_exact_zero));

    let phi = Section::new(&c, vec![e(&c, "x1*x2")]).unwrap();
    let psi = prolong_section(&phi).unwrap();
    assert_eq!(psi.g()[0], vec![e(&c, "x2"), e(&c, "x1")]);

    let bad = JetSection::new(&c, vec![e(&c, "x1")], vec![vec![Expr::zero(), Expr::zero()]]).unwrap();
    assert!(!holonomy_check(&bad, &cfg()).unwrap());
    assert!(Section::new(&c, vec![e(&c, "y1")]).is_err());

    let c = Arc::new(
        ChartSpec::new(["x1", "x2"], ["y1", "y2"])
            .unwrap()
            .with_params(["c"])
            .unwrap()
            .with_jet()
            .unwrap(),
    );
    let phi = Section::new(&c, vec![e(&c, "x1 + x2 + 1"), e(&c, "x1 + x2 - 1 + c*exp(-x1)")]).unwrap();
    assert!(holonomy_check(&prolong_section(&phi).unwrap(), &cfg()).unwrap());
}

#[test]
fn integral_section_residuals() {
    let c = jet_chart(&["x1", "x2"], &["y1"]);
    let j = JetFieldJ1::sopde(&c, zero_g(2, 1)).unwrap();
    let psi = prolong_section(&Section::new(&c, vec![e(&c, "3*x1 - 2*x2 + 5")]).unwrap()).unwrap();
    assert!(integral_section_residual(&j, &psi).unwrap().is_exact_zero());

    let psi = prolong_section(&Section::new(&c, vec![e(&c, "3*x1 - 2*x2 + 5 + 1/10*x1^2")]).unwrap()).unwrap();
    let r = integral_section_residual(&j, &psi).unwrap();
    assert!(r.f.iter().flatten().all(Expr::is_exact_zero));
    assert_eq!(r.g[0][0][0], Expr::rational(1, 5));
    assert!(r.g[0][0][1].is_exact_zero() && r.g[0][1][0].is_exact_zero() && r.g[0][1][1].is_exact_zero());

    let c = Arc::new(
        ChartSpec::new(["x1", "x2"], ["y1", "y2"])
            .unwrap()
            .with_params(["c"])
            .unwrap(),
    );
    let conn = ConnectionE::new(
        &c,
        vec![
            vec![
                e(&c, "y1 - x1 - x2"),
                e(&c, "y1^2 - x1^2 - x2^2 - 2*x1 - 2*x2 - 2*x1*x2"),
            ],
            vec![e(&c, "-y2 + x1 + x2"), Expr::one()],
        ],
    )
    .unwrap();
    let phi = Section::new(&c, vec![e(&c, "x1 + x2 + 1"), e(&c, "x1 + x2 - 1 + c*exp(-x1)")]).unwrap();
    let r = connection_section_residual(&conn, &phi).unwrap();
    assert!(r.iter().flatten().all(Expr::is_exact_zero));
    let phi = Section::new(&c, vec![e(&c, "x1 + x2 + 1"), e(&c, "x1 + x2 - 1 + c*exp(-x1) + x2^2")]).unwrap();
    let r = connection_section_residual(&conn, &phi).unwrap();
    assert_eq!(r[1][0], e(&c, "x2^2"));
    assert_eq!(r[1][1], e(&c, "2*x2"));
}

#[test]
fn sopde_conditions_examples() {
    let c = jet_chart(&["x0", "x1"], &["y"]);
    let g = vec![vec![vec![e(&c, "2"), e(&c, "5")], vec![e(&c, "5"), e(&c, "-1")]]];
    let j = JetFieldJ1::sopde(&c, g).unwrap();
    let s = sopde_integrability_conditions(&j, &cfg()).unwrap();
    assert!(s.entries().all(Expr::is_exact_zero));

    let g = vec![vec![vec![e(&c, "0"), e(&c, "1")], vec![e(&c, "0"), e(&c, "0")]]];
    let j = JetFieldJ1::sopde(&c, g).unwrap();
    let s = sopde_integrability_conditions(&j, &cfg()).unwrap();
    assert_eq!(s.symmetry_relations(), vec![(0, 0, 1, Expr::one())]);
    assert_eq!(s.pde_relations().len(), 2);

    let f = vec![vec![e(&c, "vy_0 + y"), e(&c, "vy_1")]];
    let j = JetFieldJ1::new(&c, f, zero_g(2, 1)).unwrap();
    assert!(matches!(
        sopde_integrability_conditions(&j, &cfg()),
        Err(Error::NotSopde { .. })
    ));
}

#[test]
fn prolonged_fields_preserve_contact() {
    let c = jet_chart(&["x1", "x2"], &["y1", "y2"]);
    let z = VectorField::from_pairs(
        &c,
        &[
            ("x1", e(&c, "x2*y1")),
            ("x2", e(&c, "y2^2")),
            ("y1", e(&c, "x1*y2 + 1")),
            ("y2", e(&c, "y1")),
        ],
    )
    .unwrap();
    let p = prolong_vector_field(&z).unwrap();
    for th in contact_forms(&c).unwrap() {
        assert!(th.lie_derivative(&p).unwrap().contact_reduce().unwrap().is_exact_zero());
    }
    let bad = VectorField::from_pairs(&c, &[("y1", e(&c, "v1_1"))]).unwrap();
    assert!(prolong_vector_field(&bad).is_err());
}

fn poly(vars: &'static [&'static str]) -> impl Strategy<Value = String> {
    proptest::collection::vec((-2i64..=2, 0..vars.len(), 0..vars.len(), 0u8..3), 0..3).prop_map(move |ts| {
        if ts.is_empty() {
            return "0".to_string();
        }
        ts.into_iter()
            .map(|(k, i, j, d)| match d {
                0 => format!("({k})"),
                1 => format!("({k})*{}", vars[i]),
                _ => format!("({k})*{}*{}", vars[i], vars[j]),
            })
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

const VARS1: &[&str] = &["x1", "x2", "y1", "v1_1", "v1_2"];
const VARS2: &[&str] = &["x1", "x2", "y1", "y2", "v1_1", "v1_2", "v2_1", "v2_2"];

fn jetfield_strategy() -> impl Strategy<Value = (usize, Vec<String>, bool)> {
    (1usize..=2, any::<bool>()).prop_flat_map(|(n, sparse)| {
        let vars = if n == 1 { VARS1 } else { VARS2 };
        (
            Just(n),
            proptest::collection::vec(poly(vars), n * 2 + n * 4),
            Just(sparse),
        )
    })
}

fn build_jetfield(n: usize, src: &[String], sparse: bool) -> JetFieldJ1 {
    let fiber: Vec<&str> = if n == 1 { vec!["y1"] } else { vec!["y1", "y2"] };
    let c = jet_chart(&["x1", "x2"], &fiber);
    let p = |s: &String| c.parse(s).unwrap();
    let mut it = src.iter();
    let f = (0..n)
        .map(|a| {
            (0..2)
                .map(|mu| {
                    let s = it.next().unwrap();
                    if sparse {
                        Expr::var(c.jet_var(a, mu))
                    } else {
                        p(s)
                    }
                })
                .collect()
        })
        .collect();
    let g = (0..n)
        .map(|_| {
            (0..2)
                .map(|_| (0..2).map(|_| p(it.next().unwrap())).collect())
                .collect()
        })
        .collect();
    JetFieldJ1::new(&c, f, g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn curvature_matches_involutivity((n, src, sparse) in jetfield_strategy()) {
        let j = build_jetfield(n, &src, sparse);
        let curv = curvature_j1(&j);
        let d = involutivity_defect(&jetfield_to_mvf(&j)).unwrap();
        for b in 0..n {
            prop_assert_eq!(&d.zeta[0][1][b], &curv.y_block[b][0][1]);
            for rho in 0..2 {
                prop_assert_eq!(&d.zeta[0][1][n + 2 * b + rho], &curv.v_block[b][rho][0][1]);
            }
        }
        let (flat, _) = curv.vanishes(&cfg()).unwrap();
        prop_assert_eq!(flat, d.nonzero_zeta().is_empty());
        prop_assert!(d.xi.iter().flatten().flatten().all(Expr::is_exact_zero));
    }

    #[test]
    fn curvature_antisymmetric((n, src, sparse) in jetfield_strategy()) {
        let j = build_jetfield(n, &src, sparse);
        let curv = curvature_j1(&j);
        for b in 0..n {
            prop_assert!((&curv.y_block[b][0][1] + &curv.y_block[b][1][0]).is_exact_zero());
            for rho in 0..2 {
                prop_assert!((&curv.v_block[b][rho][0][1] + &curv.v_block[b][rho][1][0]).is_exact_zero());
            }
        }
    }

    #[test]
    fn dictionary_identity((n, src, sparse) in jetfield_strategy()) {
        let j = build_jetfield(n, &src, sparse);
        prop_assert_eq!(mvf_to_jetfield(&jetfield_to_mvf(&j), &cfg()).unwrap(), j.clone());
        let r = sopde_check(&jetfield_to_mvf(&j), &cfg()).unwrap();
        prop_assert_eq!(r.via_f, r.via_theta);
        prop_assert_eq!(r.via_f, j.is_sopde(&cfg()).unwrap());
    }

    #[test]
    fn prolongation_is_holonomic(f in poly(&["x1", "x2"]), g in poly(&["x1", "x2"])) {
        let c = jet_chart(&["x1", "x2"], &["y1", "y2"]);
        let phi = Section::new(&c, vec![c.parse(&f).unwrap(), c.parse(&g).unwrap()]).unwrap();
        prop_assert!(holonomy_check(&prolong_section(&phi).unwrap(), &cfg()).unwrap());
    }
}
