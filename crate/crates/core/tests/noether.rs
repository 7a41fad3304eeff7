use std::sync::Arc;

use multijet_core::geometry::ChartSpec;
use multijet_core::jet::{prolong_vector_field, AdaptedForm, Section};
use multijet_core::lagrangian::{el_residual_on_section, poincare_cartan, Lagrangian};
use multijet_core::noether::{
    conserved_current, current_closed_on_section, preserves_contact_module, symmetry_defect, DefectCheck,
    SymmetryCandidate,
};
use multijet_core::{Error, Expr, SimplifyConfig, VectorField};
use proptest::prelude::*;

fn cfg() -> SimplifyConfig {
    SimplifyConfig::default()
}

fn chart(base: &[&str], fiber: &[&str]) -> Arc<ChartSpec> {
    Arc::new(
        ChartSpec::new(base.iter().copied(), fiber.iter().copied())
            .unwrap()
            .with_jet()
            .unwrap(),
    )
}

fn field(c: &Arc<ChartSpec>, pairs: &[(&str, &str)]) -> VectorField {
    let pairs: Vec<(&str, Expr)> = pairs.iter().map(|(n, e)| (*n, c.parse(e).unwrap())).collect();
    VectorField::from_pairs(c, &pairs).unwrap()
}

fn free_scalar() -> (Arc<ChartSpec>, Lagrangian) {
    let c = chart(&["x0", "x1"], &["y"]);
    let l = Lagrangian::new(&c, c.parse("1/2*(vy_0^2 + vy_1^2)").unwrap()).unwrap();
    (c, l)
}

#[test]
fn contact_module_examples() {
    let c = chart(&["x0", "x1"], &["y1", "y2"]);
    for name in ["y1", "y2", "x0", "x1"] {
        let r = preserves_contact_module(&VectorField::coordinate(&c, name).unwrap(), &cfg()).unwrap();
        assert!(r.preserved);
        assert!(r.residuals.iter().all(AdaptedForm::is_exact_zero));
    }
    let c = chart(&["x"], &["y"]);
    let r = preserves_contact_module(&field(&c, &[("vy_x", "y")]), &cfg()).unwrap();
    assert!(!r.preserved);
    assert_eq!(r.residuals[0].coefficient(&["x"]).unwrap(), c.parse("-y").unwrap());
    assert_eq!(r.residuals[0].terms().count(), 1);
}

#[test]
fn symmetry_defect_examples() {
    let (c, l) = free_scalar();
    let dy = SymmetryCandidate::without_xi(VectorField::coordinate(&c, "y").unwrap()).unwrap();
    assert!(symmetry_defect(&l, &dy, &cfg()).unwrap().vanishes);

    let lf = Lagrangian::new(&c, c.parse("1/2*(vy_0^2 + vy_1^2) + y^3").unwrap()).unwrap();
    let d = symmetry_defect(&lf, &dy, &cfg()).unwrap();
    assert!(!d.vanishes);
    assert_eq!(d.defect.coefficient(&["x0", "x1"]).unwrap(), c.parse("3*y^2").unwrap());
    assert_eq!(d.defect.terms().count(), 1);

    let lc = Lagrangian::new(&c, c.parse("1/2*(vy_0^2 + vy_1^2) + 7").unwrap()).unwrap();
    assert!(symmetry_defect(&lc, &dy, &cfg()).unwrap().vanishes);

    // Translations of an x-independent density.
    let lt = Lagrangian::new(&c, c.parse("1/2*(vy_0^2 + vy_1^2) + y^3").unwrap()).unwrap();
    let dx = SymmetryCandidate::without_xi(VectorField::coordinate(&c, "x0").unwrap()).unwrap();
    assert!(symmetry_defect(&lt, &dx, &cfg()).unwrap().vanishes);

    // £ = x0*vy_0 changes under ∂/∂x0 by vy_0 d²x, which is d(y dx1) modulo contact.
    let ld = Lagrangian::new(&c, c.parse("x0*vy_0").unwrap()).unwrap();
    let xi = AdaptedForm::basis(&c, vec![c.index_of("x1").unwrap()], c.parse("y").unwrap());
    let cand = SymmetryCandidate::new(VectorField::coordinate(&c, "x0").unwrap(), xi).unwrap();
    assert!(symmetry_defect(&ld, &cand, &cfg()).unwrap().vanishes);
    let bare = SymmetryCandidate::without_xi(VectorField::coordinate(&c, "x0").unwrap()).unwrap();
    assert!(!symmetry_defect(&ld, &bare, &cfg()).unwrap().vanishes);
}

#[test]
fn candidate_validation() {
    let (c, _) = free_scalar();
    let wrong = AdaptedForm::volume(&c);
    assert!(matches!(
        SymmetryCandidate::new(VectorField::coordinate(&c, "y").unwrap(), wrong),
        Err(Error::DegreeMismatch { expected: 1, found: 2 })
    ));
    let plain = Arc::new(ChartSpec::new(["x"], ["y"]).unwrap());
    assert!(SymmetryCandidate::without_xi(VectorField::coordinate(&plain, "y").unwrap()).is_err());
}

#[test]
fn conserved_current_examples() {
    let (c, l) = free_scalar();
    let dy = SymmetryCandidate::without_xi(VectorField::coordinate(&c, "y").unwrap()).unwrap();
    let j = conserved_current(&l, &dy, DefectCheck::Require, &cfg()).unwrap();
    let expected = AdaptedForm::volume_minor(&c, 0)
        .scale(&c.parse("vy_0").unwrap())
        .add(&AdaptedForm::volume_minor(&c, 1).scale(&c.parse("vy_1").unwrap()))
        .unwrap()
        .neg();
    assert!(j.current.sub(&expected).unwrap().is_exact_zero());
    assert_eq!(j.current.coefficient(&["x1"]).unwrap(), c.parse("-vy_0").unwrap());
    assert_eq!(j.current.coefficient(&["x0"]).unwrap(), c.parse("vy_1").unwrap());

    let zero = SymmetryCandidate::without_xi(VectorField::zero(&c)).unwrap();
    let j0 = conserved_current(&l, &zero, DefectCheck::Require, &cfg()).unwrap();
    assert!(j0.current.is_exact_zero());
    let phi = Section::new(&c, vec![c.parse("x0^3*x1").unwrap()]).unwrap();
    assert!(current_closed_on_section(&j0, &phi).unwrap().is_exact_zero());

    let m = chart(&["t"], &["q"]);
    let lm = Lagrangian::new(&m, m.parse("1/2*vq_t^2").unwrap()).unwrap();
    let p = SymmetryCandidate::without_xi(VectorField::coordinate(&m, "q").unwrap()).unwrap();
    let jm = conserved_current(&lm, &p, DefectCheck::Require, &cfg()).unwrap();
    assert_eq!(jm.current.degree(), 0);
    assert_eq!(jm.current.coefficient(&[]).unwrap(), m.parse("-vq_t").unwrap());

    let lf = Lagrangian::new(&c, c.parse("1/2*(vy_0^2 + vy_1^2) + y^3").unwrap()).unwrap();
    assert!(matches!(
        conserved_current(&lf, &dy, DefectCheck::Require, &cfg()),
        Err(Error::NonzeroDefect(_))
    ));
    let forced = conserved_current(&lf, &dy, DefectCheck::Acknowledge, &cfg()).unwrap();
    assert!(!forced.defect.vanishes);
}

#[test]
fn closedness_on_sections() {
    let (c, l) = free_scalar();
    let dy = SymmetryCandidate::without_xi(VectorField::coordinate(&c, "y").unwrap()).unwrap();
    let j = conserved_current(&l, &dy, DefectCheck::Require, &cfg()).unwrap();
    for s in ["3*x0 - x1 + 2", "x0^2 - x1^2", "x0*x1"] {
        let phi = Section::new(&c, vec![c.parse(s).unwrap()]).unwrap();
        assert!(current_closed_on_section(&j, &phi).unwrap().is_exact_zero(), "{s}");
    }
    let phi = Section::new(&c, vec![c.parse("x0 + 5*x1^2").unwrap()]).unwrap();
    let r = current_closed_on_section(&j, &phi).unwrap();
    assert_eq!(r, Expr::int(-10));
    assert_eq!(r, el_residual_on_section(&l, &phi).unwrap()[0]);

    // Energy-momentum current for ∂/∂x0 closes on critical sections.
    let t = SymmetryCandidate::without_xi(VectorField::coordinate(&c, "x0").unwrap()).unwrap();
    let jt = conserved_current(&l, &t, DefectCheck::Require, &cfg()).unwrap();
    let phi = Section::new(&c, vec![c.parse("x0^2 - x1^2 + x0*x1").unwrap()]).unwrap();
    assert!(current_closed_on_section(&jt, &phi).unwrap().is_exact_zero());
    let theta = poincare_cartan(&l, &cfg()).unwrap().theta_l;
    assert!(jt.current.add(&theta.interior(&t.x).unwrap()).unwrap().is_exact_zero());
}

fn poly(vars: &'static [&'static str], max_terms: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(
        (-3i64..=3, proptest::collection::vec(0..vars.len(), 0..=2)),
        1..=max_terms,
    )
    .prop_map(move |terms| {
        terms
            .into_iter()
            .map(|(k, idx)| {
                let mut t = format!("({k})");
                for i in idx {
                    t.push('*');
                    t.push_str(vars[i]);
                }
                t
            })
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn vertical_symmetry_current_divergence_is_el_residual(
        dens in poly(&["x0", "x1", "vy_0", "vy_1"], 5),
        phi in poly(&["x0", "x1"], 4),
        k in 1i64..4,
    ) {
        let c = chart(&["x0", "x1"], &["y"]);
        let l = Lagrangian::new(&c, c.parse(&dens).unwrap()).unwrap();
        let x = VectorField::coordinate(&c, "y").unwrap().scale(&Expr::int(k));
        let cand = SymmetryCandidate::without_xi(x).unwrap();
        prop_assert!(symmetry_defect(&l, &cand, &cfg()).unwrap().vanishes);
        let j = conserved_current(&l, &cand, DefectCheck::Require, &cfg()).unwrap();
        let s = Section::new(&c, vec![c.parse(&phi).unwrap()]).unwrap();
        let r = current_closed_on_section(&j, &s).unwrap();
        let el = el_residual_on_section(&l, &s).unwrap()[0].clone();
        prop_assert!((r - el * Expr::int(k)).is_exact_zero());
    }

    #[test]
    fn prolongations_preserve_contact(
        xi0 in poly(&["x0", "x1", "y1", "y2"], 3),
        xi1 in poly(&["x0", "x1", "y1", "y2"], 3),
        eta1 in poly(&["x0", "x1", "y1", "y2"], 3),
        eta2 in poly(&["x0", "x1", "y1", "y2"], 3),
    ) {
        let c = chart(&["x0", "x1"], &["y1", "y2"]);
        let z = field(&c, &[("x0", &xi0), ("x1", &xi1), ("y1", &eta1), ("y2", &eta2)]);
        let p = prolong_vector_field(&z).unwrap();
        let r = preserves_contact_module(&p, &cfg()).unwrap();
        prop_assert!(r.preserved);
    }
}
