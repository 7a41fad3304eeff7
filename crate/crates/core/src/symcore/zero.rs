use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Expr, SymError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplifyConfig {
    pub max_expansion_degree: u32,
    pub sample_count: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SimplifyConfig {
    fn default() -> Self {
        SimplifyConfig {
            max_expansion_degree: 64,
            sample_count: 20,
            tolerance: 1e-10,
            seed: 0x5eed,
        }
    }
}

impl SimplifyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.sample_count < 1 {
            return Err("sample count must be at least 1".into());
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err("tolerance must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZeroVerdict {
    ProvenZero,
    ProvenNonzero,
    NumericallyZero,
    NumericallyNonzero,
}

impl ZeroVerdict {
    pub fn is_zero(self) -> bool {
        matches!(self, ZeroVerdict::ProvenZero | ZeroVerdict::NumericallyZero)
    }

    pub fn is_proven(self) -> bool {
        matches!(self, ZeroVerdict::ProvenZero | ZeroVerdict::ProvenNonzero)
    }

    pub fn confidence(self) -> Confidence {
        if self.is_proven() {
            Confidence::Exact
        } else {
            Confidence::Numeric
        }
    }
}

/// How a symbolic conclusion was reached. `Numeric` is the weaker label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Numeric,
    Exact,
}

impl Confidence {
    pub fn and(self, other: Confidence) -> Confidence {
        self.min(other)
    }
}

/// Decides whether `e` vanishes identically.
pub fn is_zero(e: &Expr, cfg: &SimplifyConfig) -> Result<ZeroVerdict, SymError> {
    if e.expansion_degree() <= cfg.max_expansion_degree as u64 {
        let r = e.try_ratfunc()?;
        if r.is_zero() {
            return Ok(ZeroVerdict::ProvenZero);
        }
        if r.is_rational_fragment() {
            return Ok(ZeroVerdict::ProvenNonzero);
        }
        return sample_normal(e, cfg);
    }
    sample_tree(e, cfg)
}

fn sample_point(rng: &mut ChaCha8Rng) -> f64 {
    const DENOMS: [i64; 5] = [3, 5, 7, 11, 13];
    let p: i64 = rng.gen_range(-25..=25);
    let q = DENOMS[rng.gen_range(0..DENOMS.len())];
    BigRational::new(BigInt::from(p), BigInt::from(q))
        .to_f64()
        .unwrap_or(0.0)
}

fn run_samples(
    vars: &[String],
    cfg: &SimplifyConfig,
    mut probe: impl FnMut(&dyn Fn(&str) -> Option<f64>) -> Option<(f64, f64)>,
) -> Result<ZeroVerdict, SymError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_attempts = 10 * cfg.sample_count + 10;
    let mut valid = 0;
    let mut attempts = 0;
    while valid < cfg.sample_count {
        if attempts >= max_attempts {
            return Err(SymError::SamplingFailed {
                valid,
                required: cfg.sample_count,
                attempts,
            });
        }
        attempts += 1;
        let point: Vec<f64> = vars.iter().map(|_| sample_point(&mut rng)).collect();
        let env = |name: &str| vars.iter().position(|v| v == name).map(|i| point[i]);
        let Some((value, scale)) = probe(&env) else {
            continue;
        };
        if !value.is_finite() || !scale.is_finite() {
            continue;
        }
        valid += 1;
        if value.abs() > cfg.tolerance * scale.max(1.0) {
            return Ok(ZeroVerdict::NumericallyNonzero);
        }
    }
    Ok(ZeroVerdict::NumericallyZero)
}

fn sample_normal(e: &Expr, cfg: &SimplifyConfig) -> Result<ZeroVerdict, SymError> {
    let r = e.try_ratfunc()?;
    let vars: Vec<String> = e.free_vars().into_iter().collect();
    run_samples(&vars, cfg, |env| {
        let d = r.den.eval(env)?;
        if !d.is_finite() || d.abs() < 1e-300 {
            return None;
        }
        let terms = r.num.eval_terms(env)?;
        let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        Some((terms.iter().sum(), scale))
    })
}

fn sample_tree(e: &Expr, cfg: &SimplifyConfig) -> Result<ZeroVerdict, SymError> {
    let vars: Vec<String> = e.free_vars().into_iter().collect();
    run_samples(&vars, cfg, |env| {
        let v = e.eval(env)?;
        Some((v, 1.0))
    })
}
