use std::sync::Arc;

use multijet_core::geometry::{
    integrability_algorithm, involutivity_defect, lie_bracket, transversality_check, BranchVerdict, ChartSpec,
    DecomposableMVF, IntegrabilityConfig, Reducer, VectorField,
};
use multijet_core::{Expr, SimplifyConfig};
use proptest::prelude::*;

fn chart(base: &[&str], fiber: &[&str]) -> Arc<ChartSpec> {
    Arc::new(ChartSpec::new(base.iter().copied(), fiber.iter().copied()).unwrap())
}

fn field(c: &Arc<ChartSpec>, pairs: &[(&str, &str)]) -> VectorField {
    let pairs: Vec<(&str, Expr)> = pairs.iter().map(|(n, e)| (*n, c.parse(e).unwrap())).collect();
    VectorField::from_pairs(c, &pairs).unwrap()
}

fn example(c: &Arc<ChartSpec>) -> DecomposableMVF {
    let y1 = field(c, &[("x1", "1"), ("y1", "y1-x1-x2"), ("y2", "-y2+x1+x2")]);
    let y2 = field(
        c,
        &[("x2", "1"), ("y1", "y1^2-x1^2-x2^2-2*x1-2*x2-2*x1*x2"), ("y2", "1")],
    );
    DecomposableMVF::new(c, vec![y1, y2]).unwrap()
}

#[test]
fn bracket_examples() {
    let c = chart(&["x1", "x2"], &["y1", "y2"]);
    let dx1 = VectorField::coordinate(&c, "x1").unwrap();
    let dx2 = VectorField::coordinate(&c, "x2").unwrap();
    assert!(lie_bracket(&dx1, &dx2).unwrap().is_exact_zero());

    let y = example(&c);
    let b = lie_bracket(&y.factors()[0], &y.factors()[1]).unwrap();
    let expected = field(&c, &[("y1", "(x1+x2-y1)^2-1")]);
    assert_eq!(b, expected);

    let c1 = chart(&["x"], &["y"]);
    let f = field(&c1, &[("x", "x^2*y")]);
    let dx = VectorField::coordinate(&c1, "x").unwrap();
    assert_eq!(lie_bracket(&f, &dx).unwrap(), field(&c1, &[("x", "-2*x*y")]));
}

#[test]
fn defect_examples() {
    let c = chart(&["x1", "x2"], &["y1", "y2"]);
    let d = involutivity_defect(&example(&c)).unwrap();
    let nz = d.nonzero_zeta();
    assert_eq!(nz.len(), 1);
    assert_eq!((nz[0].0, nz[0].1, nz[0].2), (0, 1, 0));
    assert_eq!(nz[0].3, c.parse("(x1+x2-y1)^2-1").unwrap());
    assert!(d.xi.iter().flatten().flatten().all(Expr::is_exact_zero));

    let c = chart(&["x1", "x2"], &["y"]);
    let y = DecomposableMVF::new(
        &c,
        vec![field(&c, &[("x1", "1"), ("y", "y")]), field(&c, &[("x2", "1")])],
    )
    .unwrap();
    let d = involutivity_defect(&y).unwrap();
    assert!(d.nonzero_zeta().is_empty());
    assert!(d.is_involutive(&SimplifyConfig::default()).unwrap().0);
}

#[test]
fn defect_rejects_non_normalized() {
    let c = chart(&["x1", "x2"], &["y"]);
    let y = DecomposableMVF::new(&c, vec![field(&c, &[("x1", "2")]), field(&c, &[("x2", "1")])]).unwrap();
    assert!(involutivity_defect(&y).is_err());
}

#[test]
fn integrability_on_worked_example() {
    let c = chart(&["x1", "x2"], &["y1", "y2"]);
    let tree = integrability_algorithm(&example(&c), &IntegrabilityConfig::default()).unwrap();
    assert_eq!(tree.verdict(), BranchVerdict::IntegrableOnSubmanifold);
    let leaves = tree.leaves();
    assert_eq!(leaves.len(), 2);
    let za = c.parse("x1+x2-y1-1").unwrap();
    let zb = c.parse("x1+x2-y1+1").unwrap();
    let a = leaves.iter().find(|l| l.constraints.exprs().contains(&za)).unwrap();
    let b = leaves.iter().find(|l| l.constraints.exprs().contains(&zb)).unwrap();
    assert_eq!(a.verdict, BranchVerdict::NoSolution);
    assert_eq!(a.witness, Some(Expr::int(2)));
    assert_eq!(a.witness_source.as_deref(), Some("Y1(x1 + x2 - y1 - 1)"));
    assert_eq!(b.verdict, BranchVerdict::IntegrableOnSubmanifold);
    assert_eq!(b.constraints.exprs(), vec![zb]);
    assert_eq!(b.dynamical, Some(true));
}

#[test]
fn integrability_flat_and_empty() {
    let c = chart(&["x1", "x2"], &["y"]);
    let flat = DecomposableMVF::new(&c, vec![field(&c, &[("x1", "1")]), field(&c, &[("x2", "1")])]).unwrap();
    let tree = integrability_algorithm(&flat, &IntegrabilityConfig::default()).unwrap();
    assert_eq!(tree.verdict(), BranchVerdict::IntegrableEverywhere);
    assert_eq!(tree.root.dynamical, Some(true));

    let y = DecomposableMVF::new(
        &c,
        vec![field(&c, &[("x1", "1"), ("y", "x2")]), field(&c, &[("x2", "1")])],
    )
    .unwrap();
    let d = involutivity_defect(&y).unwrap();
    assert_eq!(d.nonzero_zeta()[0].3, Expr::int(-1));
    let tree = integrability_algorithm(&y, &IntegrabilityConfig::default()).unwrap();
    assert_eq!(tree.verdict(), BranchVerdict::NoSolution);
}

#[test]
fn integrability_depth_bound() {
    // Y1 = d/dx1 + x1*y*d/dy, Y2 = d/dx2 + y*d/dy: bracket generates y, then tangency keeps producing.
    let c = chart(&["x1", "x2"], &["y"]);
    let y = DecomposableMVF::new(
        &c,
        vec![field(&c, &[("x1", "1"), ("y", "x2*y")]), field(&c, &[("x2", "1")])],
    )
    .unwrap();
    let tree = integrability_algorithm(&y, &IntegrabilityConfig::default()).unwrap();
    // [Y1,Y2] = -y d/dy; on y = 0 both fields are tangent.
    assert_eq!(tree.verdict(), BranchVerdict::IntegrableOnSubmanifold);
    let cfg = IntegrabilityConfig {
        depth_bound: 1,
        ..Default::default()
    };
    let y = DecomposableMVF::new(
        &c,
        vec![field(&c, &[("x1", "1"), ("y", "y^2+x2")]), field(&c, &[("x2", "1")])],
    )
    .unwrap();
    let tree = integrability_algorithm(&y, &cfg).unwrap();
    assert!(matches!(
        tree.verdict(),
        BranchVerdict::Inconclusive | BranchVerdict::NoSolution
    ));
}

#[test]
fn transversality_examples() {
    let cfg = SimplifyConfig::default();
    let c = chart(&["x1", "x2"], &["y"]);
    let r = transversality_check(&example_flat(&c), &cfg).unwrap();
    assert!(r.transverse);
    assert_eq!(r.determinant, Expr::one());
    let vert = DecomposableMVF::new(&c, vec![field(&c, &[("y", "1")]), field(&c, &[("x2", "1")])]).unwrap();
    let r = transversality_check(&vert, &cfg).unwrap();
    assert!(!r.transverse);
    let c2 = chart(&["x", "t"], &["y"]);
    let y = DecomposableMVF::new(&c2, vec![field(&c2, &[("x", "x")]), field(&c2, &[("t", "1")])]).unwrap();
    let r = transversality_check(&y, &cfg).unwrap();
    assert!(r.transverse);
    assert_eq!(r.determinant, c2.parse("x").unwrap());
}

fn example_flat(c: &Arc<ChartSpec>) -> DecomposableMVF {
    DecomposableMVF::new(c, vec![field(c, &[("x1", "1"), ("y", "y")]), field(c, &[("x2", "1")])]).unwrap()
}

#[test]
fn jet_chart_names() {
    let c = ChartSpec::new(["x0", "x1"], ["y1", "y2"]).unwrap().with_jet().unwrap();
    assert_eq!(c.jet_var(0, 1), "v1_1");
    assert_eq!(c.jet_var(1, 0), "v2_0");
    assert_eq!(c.dim(), 8);
    let c = ChartSpec::new(["t"], ["q"]).unwrap().with_jet().unwrap();
    assert_eq!(c.jet_var(0, 0), "vq_t");
    assert!(ChartSpec::new(["x"], ["x"]).is_err());
}

fn poly_strategy(vars: Vec<String>) -> impl Strategy<Value = String> {
    let n = vars.len();
    proptest::collection::vec((-3i64..=3, 0..n, 0..n, 0u8..3), 1..4).prop_map(move |terms| {
        terms
            .into_iter()
            .map(|(c, i, j, k)| match k {
                0 => format!("({c})"),
                1 => format!("({c})*{}", vars[i]),
                _ => format!("({c})*{}*{}", vars[i], vars[j]),
            })
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

fn field_strategy(dim: usize) -> impl Strategy<Value = Vec<String>> {
    let vars: Vec<String> = (0..dim).map(|i| format!("q{i}")).collect();
    proptest::collection::vec(poly_strategy(vars), dim)
}

fn triple() -> impl Strategy<Value = (usize, Vec<String>, Vec<String>, Vec<String>)> {
    (2usize..=5).prop_flat_map(|dim| (Just(dim), field_strategy(dim), field_strategy(dim), field_strategy(dim)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn bracket_antisymmetry_and_jacobi((dim, a, b, d) in triple()) {
        let names: Vec<String> = (0..dim).map(|i| format!("q{i}")).collect();
        let c = Arc::new(ChartSpec::new([names[0].clone()], names[1..].to_vec()).unwrap());
        let mk = |src: &[String]| {
            let comps: Vec<Expr> = src.iter().map(|s| c.parse(s).unwrap()).collect();
            VectorField::from_components(&c, comps).unwrap()
        };
        let (x, y, z) = (mk(&a), mk(&b), mk(&d));
        let xy = lie_bracket(&x, &y).unwrap();
        let yx = lie_bracket(&y, &x).unwrap();
        prop_assert!(xy.add(&yx).unwrap().is_exact_zero());
        let j = lie_bracket(&xy, &z).unwrap()
            .add(&lie_bracket(&lie_bracket(&y, &z).unwrap(), &x).unwrap()).unwrap()
            .add(&lie_bracket(&lie_bracket(&z, &x).unwrap(), &y).unwrap()).unwrap();
        prop_assert!(j.is_exact_zero());
    }
}

#[test]
fn substitution_poles_are_resolved() {
    // Solving 2*x2*y1 - 1 for y1 divides by x2; the later constraint x2 = 0 empties the set.
    let c = chart(&["x1", "x2"], &["y1"]);
    let order = c.elimination_order();
    let cons = [c.parse("2*x2*y1 - 1").unwrap(), c.parse("x2").unwrap()];
    let r = Reducer::build(&cons, &order, &SimplifyConfig::default()).unwrap();
    assert_eq!(r.unwrap_err(), Expr::int(-1));

    let y = DecomposableMVF::new(
        &c,
        vec![
            field(&c, &[("x1", "1"), ("y1", "-x2")]),
            field(&c, &[("x2", "1"), ("y1", "y1^2")]),
        ],
    )
    .unwrap();
    let tree = integrability_algorithm(&y, &IntegrabilityConfig::default()).unwrap();
    assert_eq!(tree.verdict(), BranchVerdict::NoSolution);
}
