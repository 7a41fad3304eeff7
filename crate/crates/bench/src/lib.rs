//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use multijet_core::lagrangian::Lagrangian;
use multijet_core::{ChartSpec, DecomposableMVF, Expr, VectorField};

fn field(c: &Arc<ChartSpec>, pairs: &[(&str, &str)]) -> VectorField {
    let pairs: Vec<(&str, Expr)> = pairs
        .iter()
        .map(|(n, e)| (*n, c.parse(e).expect("fixture parses")))
        .collect();
    VectorField::from_pairs(c, &pairs).expect("fixture field")
}

/// Two factors on base (x1, x2), fiber (y1, y2) whose bracket splits into two branches.
pub fn two_branch_example() -> DecomposableMVF {
    let c = Arc::new(ChartSpec::new(["x1", "x2"], ["y1", "y2"]).expect("chart"));
    let y1 = field(&c, &[("x1", "1"), ("y1", "y1-x1-x2"), ("y2", "-y2+x1+x2")]);
    let y2 = field(
        &c,
        &[("x2", "1"), ("y1", "y1^2-x1^2-x2^2-2*x1-2*x2-2*x1*x2"), ("y2", "1")],
    );
    DecomposableMVF::new(&c, vec![y1, y2]).expect("factors")
}

/// ½ Σ (v^A_μ)² + f on m base and n fiber coordinates.
pub fn orthonormal(m: usize, n: usize, f: &str) -> Lagrangian {
    let base: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
    let fiber: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
    let c = Arc::new(ChartSpec::new(base, fiber).and_then(|c| c.with_jet()).expect("chart"));
    let mut density = c.parse(f).expect("potential parses");
    for a in 0..n {
        for mu in 0..m {
            let v = Expr::var(c.jet_var(a, mu));
            density = density + Expr::rational(1, 2) * &v * &v;
        }
    }
    Lagrangian::new(&c, density).expect("density")
}

/// Dense polynomial of the given degree in all coordinates of `c`.
pub fn dense_poly(c: &ChartSpec, degree: u32) -> Expr {
    let coords = c.coords();
    let mut acc = Expr::one();
    for (i, x) in coords.iter().enumerate() {
        acc = acc * (Expr::var(x) + Expr::int(i as i64 + 1));
    }
    acc.powi(degree as i64).expect("integer power")
}
