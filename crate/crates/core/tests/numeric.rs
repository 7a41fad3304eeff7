use std::sync::Arc;

use multijet_core::geometry::ChartSpec;
use multijet_core::jet::{JetFieldJ1, Section};
use multijet_core::lagrangian::Lagrangian;
use multijet_core::numeric::{
    check_flow_commutation, integrate_m_flow, numeric_residual, BaseGrid, FlowConfig, NumericSection, ResidualTarget,
};
use multijet_core::{DecomposableMVF, Error, Expr, VectorField};

fn chart(base: &[&str], fiber: &[&str]) -> Arc<ChartSpec> {
    Arc::new(ChartSpec::new(base.iter().copied(), fiber.iter().copied()).unwrap())
}

fn jchart(base: &[&str], fiber: &[&str]) -> Arc<ChartSpec> {
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

fn example(c: &Arc<ChartSpec>) -> DecomposableMVF {
    let y1 = field(c, &[("x1", "1"), ("y1", "y1-x1-x2"), ("y2", "-y2+x1+x2")]);
    let y2 = field(
        c,
        &[("x2", "1"), ("y1", "y1^2-x1^2-x2^2-2*x1-2*x2-2*x1*x2"), ("y2", "1")],
    );
    DecomposableMVF::new(c, vec![y1, y2]).unwrap()
}

fn branch_b_error(h: f64, order: u8, (p, q): (i64, i64)) -> f64 {
    let cc = p as f64 / q as f64;
    let c = chart(&["x1", "x2"], &["y1", "y2"]);
    let y = example(&c);
    let grid = BaseGrid::uniform(&[(0.0, 1.0), (0.0, 1.0)], 11).unwrap();
    let cfg = FlowConfig {
        h,
        order,
        ..Default::default()
    };
    let cons = [c.parse("x1+x2-y1+1").unwrap()];
    let sec = integrate_m_flow(&y, &cons, &[0.0, 0.0, 1.0, cc - 1.0], &grid, &cfg).unwrap();
    let exact2 = c.parse(&format!("x1+x2-1+({p}/{q})*exp(-x1)")).unwrap();
    sec.max_error(&[("y1", c.parse("x1+x2+1").unwrap()), ("y2", exact2)])
        .unwrap()
}

#[test]
fn branch_b_matches_closed_form() {
    for cc in [(1, 1), (5, 2), (-3, 4)] {
        let e = branch_b_error(1e-3, 4, cc);
        assert!(e <= 1e-6, "c = {cc:?}: {e}");
    }
    let e2 = branch_b_error(1e-3, 2, (1, 1));
    assert!(e2 <= 1e-6, "{e2}");
}

#[test]
fn halving_step_gains_the_integrator_order() {
    // Coarse steps keep the truncation error far above rounding.
    for (order, h) in [(4u8, 0.1), (4, 0.05), (2, 0.1), (2, 0.02)] {
        let ratio = branch_b_error(h, order, (2, 1)) / branch_b_error(h / 2.0, order, (2, 1));
        assert!(
            ratio >= 2f64.powf(order as f64 - 0.5),
            "order {order}, h {h}: ratio {ratio}"
        );
    }
}

#[test]
fn flat_and_sopde_flows() {
    let c = chart(&["x1", "x2"], &["y1", "y2"]);
    let flat = DecomposableMVF::new(
        &c,
        vec![
            VectorField::coordinate(&c, "x1").unwrap(),
            VectorField::coordinate(&c, "x2").unwrap(),
        ],
    )
    .unwrap();
    let grid = BaseGrid::uniform(&[(-1.0, 1.0), (0.0, 2.0)], 5).unwrap();
    let sec = integrate_m_flow(&flat, &[], &[0.3, 0.1, 4.0, -2.0], &grid, &FlowConfig::default()).unwrap();
    assert!(sec.values().iter().all(|v| v == &vec![4.0, -2.0]));

    let j = jchart(&["x"], &["y"]);
    let x = JetFieldJ1::sopde(&j, vec![vec![vec![Expr::zero()]]]).unwrap();
    let y = multijet_core::jet::jetfield_to_mvf(&x);
    let grid = BaseGrid::uniform(&[(0.0, 3.0)], 13).unwrap();
    let sec = integrate_m_flow(&y, &[], &[0.0, 0.0, 1.5], &grid, &FlowConfig::default()).unwrap();
    assert!(
        sec.max_error(&[("y", j.parse("3/2*x").unwrap()), ("vy_x", j.parse("3/2").unwrap())])
            .unwrap()
            < 1e-12
    );
}

#[test]
fn flow_errors() {
    let c = chart(&["x1", "x2"], &["y1", "y2"]);
    let y = example(&c);
    let grid = BaseGrid::uniform(&[(0.0, 1.0), (0.0, 1.0)], 3).unwrap();
    let cons = [c.parse("x1+x2-y1+1").unwrap()];
    assert!(matches!(
        integrate_m_flow(&y, &cons, &[0.0, 0.0, 1.5, 0.0], &grid, &FlowConfig::default()),
        Err(Error::ConstraintViolation { .. })
    ));
    let bad = FlowConfig {
        order: 3,
        ..Default::default()
    };
    assert!(matches!(
        integrate_m_flow(&y, &[], &[0.0, 0.0, 1.0, 0.0], &grid, &bad),
        Err(Error::InvalidConfig(_))
    ));

    let d = chart(&["x"], &["y"]);
    let blow = DecomposableMVF::new(&d, vec![field(&d, &[("x", "1"), ("y", "y^2")])]).unwrap();
    let grid = BaseGrid::uniform(&[(0.0, 2.0)], 3).unwrap();
    assert!(matches!(
        integrate_m_flow(&blow, &[], &[0.0, 1.0], &grid, &FlowConfig::default()),
        Err(Error::StepRejected(_))
    ));
}

#[test]
fn commutation_examples() {
    let c = chart(&["x1", "x2"], &["y1", "y2"]);
    let commuting = DecomposableMVF::new(
        &c,
        vec![
            field(&c, &[("x1", "1"), ("y1", "y1")]),
            field(&c, &[("x2", "1"), ("y2", "y2")]),
        ],
    )
    .unwrap();
    let cfg = FlowConfig {
        h: 1e-2,
        ..Default::default()
    };
    assert!(check_flow_commutation(&commuting, &[0.0, 0.0, 1.0, 1.0], 0.5, 0.5, &cfg).unwrap() < 1e-9);

    let y = example(&c);
    let on = [0.0, 0.0, 1.0, 0.5];
    let off = [0.0, 0.0, 0.0, 0.5];
    let mut last_off = f64::INFINITY;
    for h in [1e-2, 5e-3, 2.5e-3] {
        let cfg = FlowConfig {
            h,
            ..Default::default()
        };
        assert!(check_flow_commutation(&y, &on, 0.2, 0.2, &cfg).unwrap() < 1e-9);
        let dev = check_flow_commutation(&y, &off, 0.2, 0.2, &cfg).unwrap();
        assert!(dev > 1e-3, "{dev}");
        if last_off.is_finite() {
            assert!((dev - last_off).abs() < 1e-6 * last_off);
        }
        last_off = dev;
    }
}

fn harmonic_setup(extra: &str) -> (Arc<ChartSpec>, Lagrangian, NumericSection) {
    let c = jchart(&["x0", "x1"], &["y"]);
    let l = Lagrangian::new(&c, c.parse("1/2*(vy_0^2 + vy_1^2)").unwrap()).unwrap();
    let phi = Section::new(&c, vec![c.parse(&format!("x0^3 - 3*x0*x1^2 + x0 + 2{extra}")).unwrap()]).unwrap();
    let grid = BaseGrid::uniform(&[(0.0, 1.0), (0.0, 1.0)], 101).unwrap();
    let sec = NumericSection::sample(&phi, &grid).unwrap();
    (c, l, sec)
}

#[test]
fn residual_examples() {
    let cfg = FlowConfig::default();
    let (_, l, sec) = harmonic_setup("");
    assert!(numeric_residual(ResidualTarget::Lagrangian(&l), &sec, &cfg).unwrap() < cfg.residual_tolerance);

    let (_, l, sec) = harmonic_setup(" + 1/1000*x1^2");
    let r = numeric_residual(ResidualTarget::Lagrangian(&l), &sec, &cfg).unwrap();
    assert!((r - 2e-3).abs() < 1e-8, "{r}");

    let c = jchart(&["x0", "x1"], &["y"]);
    let l = Lagrangian::new(&c, c.parse("1/2*(vy_0^2 + vy_1^2)").unwrap()).unwrap();
    let phi = Section::new(&c, vec![c.parse("5").unwrap()]).unwrap();
    let grid = BaseGrid::uniform(&[(0.0, 1.0), (0.0, 1.0)], 7).unwrap();
    let sec = NumericSection::sample(&phi, &grid).unwrap();
    assert_eq!(
        numeric_residual(ResidualTarget::Lagrangian(&l), &sec, &cfg).unwrap(),
        0.0
    );

    let grid = BaseGrid::uniform(&[(0.0, 1.0), (0.0, 1.0)], 2).unwrap();
    let sec = NumericSection::sample(&phi, &grid).unwrap();
    assert!(matches!(
        numeric_residual(ResidualTarget::Lagrangian(&l), &sec, &cfg),
        Err(Error::GridTooSmall(_))
    ));
}

#[test]
fn jet_field_residuals() {
    let c = jchart(&["x0", "x1"], &["y"]);
    let g = vec![vec![
        vec![Expr::int(2), Expr::zero()],
        vec![Expr::zero(), Expr::int(-2)],
    ]];
    let j = JetFieldJ1::sopde(&c, g).unwrap();
    let grid = BaseGrid::uniform(&[(0.0, 1.0), (-1.0, 1.0)], 21).unwrap();
    let cfg = FlowConfig::default();
    let good = Section::new(&c, vec![c.parse("x0^2 - x1^2 + 3*x0").unwrap()]).unwrap();
    let sec = NumericSection::sample(&good, &grid).unwrap();
    assert!(numeric_residual(ResidualTarget::JetField(&j), &sec, &cfg).unwrap() < 1e-9);
    let f_only = NumericSection::from_parts(
        sec.base().to_vec(),
        vec!["y".into()],
        sec.grid().clone(),
        sec.values().iter().map(|v| vec![v[0]]).collect(),
    )
    .unwrap();
    assert!(numeric_residual(ResidualTarget::JetField(&j), &f_only, &cfg).unwrap() < 1e-9);

    let bad = Section::new(&c, vec![c.parse("x0^2 + x1^2").unwrap()]).unwrap();
    let sec = NumericSection::sample(&bad, &grid).unwrap();
    let r = numeric_residual(ResidualTarget::JetField(&j), &sec, &cfg).unwrap();
    assert!((r - 4.0).abs() < 1e-9, "{r}");
}

#[test]
fn csv_round_trip_and_determinism() {
    let c = chart(&["x1", "x2"], &["y1", "y2"]);
    let y = example(&c);
    let grid = BaseGrid::uniform(&[(0.0, 1.0), (0.0, 1.0)], 6).unwrap();
    let cfg = FlowConfig {
        h: 1e-2,
        ..Default::default()
    };
    let a = integrate_m_flow(&y, &[], &[0.0, 0.0, 1.0, 0.0], &grid, &cfg).unwrap();
    let b = integrate_m_flow(&y, &[], &[0.0, 0.0, 1.0, 0.0], &grid, &cfg).unwrap();
    let text = a.to_csv().unwrap();
    assert_eq!(text, b.to_csv().unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2,y1,y2"));
    assert_eq!(lines.next().unwrap().split(',').next(), Some("0.0000000000000000e0"));
    let back = NumericSection::from_csv(&text, 2).unwrap();
    assert_eq!(back, a);
    assert!(BaseGrid::new(vec![vec![0.0, 1.0, 0.5]]).is_err());
}

#[test]
fn residual_converges_at_stencil_order() {
    let c = jchart(&["x0", "x1"], &["y"]);
    let l = Lagrangian::new(&c, c.parse("1/2*(vy_0^2 + vy_1^2)").unwrap()).unwrap();
    let phi = Section::new(&c, vec![c.parse("exp(x0)*sin(x1)").unwrap()]).unwrap();
    let cfg = FlowConfig::default();
    let r = |n: usize| {
        let grid = BaseGrid::uniform(&[(0.0, 1.0), (0.0, 1.0)], n).unwrap();
        numeric_residual(
            ResidualTarget::Lagrangian(&l),
            &NumericSection::sample(&phi, &grid).unwrap(),
            &cfg,
        )
        .unwrap()
    };
    let (coarse, fine) = (r(11), r(21));
    assert!(coarse / fine > 3.5 && coarse / fine < 4.5, "{coarse} {fine}");
}
