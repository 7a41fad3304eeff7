use std::collections::HashMap;

use multijet_core::symcore::{
    differentiate, factor_constraint, is_zero, parse, substitute, Expr, SimplifyConfig, SymError, ZeroVerdict,
};

const VARS: &[&str] = &["x1", "x2", "y1", "a", "b", "x", "v"];

fn p(s: &str) -> Expr {
    parse(s, VARS).unwrap()
}

#[test]
fn parse_round_trip() {
    let e = p("(x1+x2-y1)^2-1");
    let printed = e.to_string();
    assert_eq!(printed, "(x1 + x2 - y1)^2 - 1");
    assert_eq!(p(&printed), e);
    let n = e.normalize();
    assert_eq!(p(&n.to_string()), e);
}

#[test]
fn parse_sum_of_three() {
    let e = p("y1 - x1 - x2");
    match e.node() {
        multijet_core::symcore::Node::Sum(ts) => assert_eq!(ts.len(), 3),
        other => panic!("expected a sum, got {other:?}"),
    }
}

#[test]
fn parse_unknown_variable() {
    let err = parse("z1+1", &["x1"]).unwrap_err();
    assert!(matches!(err, SymError::UnknownVariable { ref name, .. } if name == "z1"));
}

#[test]
fn parse_syntax_error_offset() {
    let err = parse("x1 + * 2", VARS).unwrap_err();
    assert_eq!(
        err,
        SymError::Syntax {
            offset: 5,
            message: "expected a number, name or `(`".into()
        }
    );
    assert!(matches!(parse("x1 x2", VARS), Err(SymError::Syntax { offset: 3, .. })));
}

#[test]
fn rational_literals_and_division() {
    assert_eq!(p("x/2/3"), p("x/6"));
    assert_eq!(p("1/2*v^2"), p("v^2/2"));
    assert_eq!(p("2^(1/2)").normalize().to_string(), "sqrt(2)");
    assert_eq!(p("4^(1/2)"), Expr::int(2));
    assert!(matches!(parse("1/(x-x)", VARS), Err(SymError::DivisionByZero)));
}

#[test]
fn differentiate_examples() {
    assert_eq!(differentiate(&p("(x1+x2-y1)^2"), "y1"), p("-2*(x1+x2-y1)"));
    assert_eq!(differentiate(&p("y1-x1-x2"), "x1"), Expr::int(-1));
    assert_eq!(differentiate(&p("1/2*v^2"), "v"), p("v"));
    assert_eq!(
        differentiate(&p("sin(x)*exp(x)"), "x"),
        p("cos(x)*exp(x)+sin(x)*exp(x)")
    );
    assert_eq!(differentiate(&p("log(x)"), "x"), p("1/x"));
    assert_eq!(differentiate(&p("sqrt(x)"), "x"), p("1/2*x^(-1/2)"));
}

#[test]
fn substitute_examples() {
    let mut b = HashMap::new();
    b.insert("y1".to_string(), p("x1+x2+1"));
    assert_eq!(substitute(&p("y1 - x1 - x2"), &b).unwrap(), Expr::int(1));
    let e = p("x1*y1+sin(x2)");
    assert_eq!(substitute(&e, &HashMap::new()).unwrap(), e);
    let mut b = HashMap::new();
    b.insert("v".to_string(), Expr::zero());
    assert_eq!(substitute(&p("v^2"), &b).unwrap(), Expr::zero());
}

#[test]
fn zero_test_examples() {
    let cfg = SimplifyConfig::default();
    assert_eq!(
        is_zero(&p("(a+b)^2 - a^2 - 2*a*b - b^2"), &cfg).unwrap(),
        ZeroVerdict::ProvenZero
    );
    assert_eq!(
        is_zero(&p("(x1+x2-y1)^2 - 1"), &cfg).unwrap(),
        ZeroVerdict::ProvenNonzero
    );
    assert_eq!(
        is_zero(&p("sin(x)^2 + cos(x)^2 - 1"), &cfg).unwrap(),
        ZeroVerdict::NumericallyZero
    );
    assert_eq!(
        is_zero(&p("sin(x)^2 - cos(x)^2"), &cfg).unwrap(),
        ZeroVerdict::NumericallyNonzero
    );
    assert_eq!(
        is_zero(&p("x/(x+1) - 1 + 1/(x+1)"), &cfg).unwrap(),
        ZeroVerdict::ProvenZero
    );
}

#[test]
fn factor_examples() {
    let f = factor_constraint(&p("(x1+x2-y1)^2-1"));
    let printed: Vec<String> = f.iter().map(|e| e.to_string()).collect();
    assert_eq!(printed, vec!["x1 + x2 - y1 + 1", "x1 + x2 - y1 - 1"]);
    assert_eq!(factor_constraint(&p("x^2+1")), vec![p("x^2+1")]);
    assert_eq!(factor_constraint(&p("exp(x)-1")), vec![p("exp(x)-1")]);
    assert!(factor_constraint(&Expr::int(7)).is_empty());
}

#[test]
fn factor_harder_cases() {
    let cases = [
        ("x^4-1", 3),
        ("6*x^2*a - 6*a", 3),
        ("(x^2+a*b)*(x-a)^2", 3),
        ("(x1^3 - 2*x2)*(x1*x2 + y1 + 3)*(x1 - 1)", 3),
        ("x^6 - 1", 4),
        ("a^4 + 4*b^4", 2),
    ];
    for (text, n) in cases {
        let e = p(text);
        let f = factor_constraint(&e);
        assert_eq!(f.len(), n, "{text}: {f:?}");
        let prod = f.iter().fold(Expr::one(), |acc, x| acc * x);
        let ratio = e.checked_div(&prod).unwrap();
        assert!(ratio.is_constant(), "{text}: product differs by {ratio}");
    }
}

#[test]
fn factor_high_degree_images() {
    let quartic = "8*x1^4 + 24*x1^3*y1 + 24*x1*y1^3 + 8*y1^4 + 12*x1^3 - 8*x1^2*y1 - 12*x1*y1^2 + 8*y1^3 + 8*x1^2 \
                   - 12*x1*y1 - 8*y1 + 1";
    let cubic = "6*x1^3 + 18*x1*y1^2 + 8*y1^3 - 2*x1^2 - 6*x1*y1 + 6*y1^2 - 3*x1 - 2";
    let e = p(&format!("({quartic})^2 * ({cubic})"));
    let f = factor_constraint(&e);
    assert_eq!(f.len(), 3, "{f:?}");
    for g in [quartic, cubic] {
        assert!(f.contains(&p(g)), "{g} missing from {f:?}");
    }
    let prod = f.iter().fold(Expr::one(), |acc, x| acc * x);
    assert!(e.checked_div(&prod).unwrap().is_constant());
}
