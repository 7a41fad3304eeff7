use multijet_cli::problem::Problem;
use multijet_cli::{run, Command, Settings};
use multijet_core::Expr;
use proptest::prelude::*;

const VARS: &[&str] = &["x1", "x2", "y1"];

fn poly() -> impl Strategy<Value = String> {
    proptest::collection::vec((-3i64..=3, 0..VARS.len(), 0..VARS.len(), 0u8..3), 1..4).prop_map(|ts| {
        ts.into_iter()
            .map(|(k, i, j, d)| match d {
                0 => format!("({k})"),
                1 => format!("({k})*{}", VARS[i]),
                _ => format!("({k})*{}*{}", VARS[i], VARS[j]),
            })
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

fn problem_text(a: &str, b: &str, c: &str) -> String {
    format!(
        "bundle {{ base = [x1, x2]; fiber = [y1] }}\nmultivector {{\n  Y1 = d/dx1 + ({a}) * d/dy1\n  Y2 = d/dx2 + ({b}) * d/dy1 + ({c}) * d/dx1\n}}\n"
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn dsl_fields_match_direct_parsing(a in poly(), b in poly(), c in poly()) {
        let p = Problem::parse(&problem_text(&a, &b, &c)).unwrap();
        let y = p.multivector("check-integrability").unwrap();
        let chart = y.chart().clone();
        let parse = |s: &str| chart.parse(s).unwrap();
        let f = y.factors();
        prop_assert_eq!(f[0].component_of("x1").unwrap(), &Expr::one());
        prop_assert_eq!(f[0].component_of("y1").unwrap(), &parse(&a));
        prop_assert_eq!(f[1].component_of("x1").unwrap(), &parse(&c));
        prop_assert_eq!(f[1].component_of("y1").unwrap(), &parse(&b));
    }

    #[test]
    fn reports_are_deterministic(a in poly(), b in poly(), seed in 0u64..1000) {
        let text = problem_text(&a, &b, "0");
        let settings = Settings { seed: Some(seed), depth: 4, ..Default::default() };
        let r1 = serde_json::to_string(&run(Command::CheckIntegrability, "p.prob", &text, &settings)).unwrap();
        let r2 = serde_json::to_string(&run(Command::CheckIntegrability, "p.prob", &text, &settings)).unwrap();
        prop_assert_eq!(&r1, &r2);
        let v: serde_json::Value = serde_json::from_str(&r1).unwrap();
        let code = v["exit_code"].as_i64().unwrap();
        prop_assert!([0, 1, 2].contains(&code), "{}", r1);
        if v["confidence"] == "numeric" {
            prop_assert_eq!(code, 2);
        }
    }
}
