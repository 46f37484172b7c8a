//! Finite discrete value distributions on the nonnegative reals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input tolerance on the probability sum. Accepted inputs are renormalized.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// A finite distribution with strictly increasing nonnegative support and
/// positive probabilities summing to one.
///
/// Tails use the "at least" convention: `tail(u) = P(X >= u)`, so a buyer whose
/// value equals a posted price buys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
}

/// Wire form: `{"values": [...], "probs": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDistribution {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl TryFrom<RawDistribution> for DiscreteDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        DiscreteDistribution::new(raw.values, raw.probs)
    }
}

impl From<DiscreteDistribution> for RawDistribution {
    fn from(d: DiscreteDistribution) -> Self {
        RawDistribution {
            values: d.values,
            probs: d.probs,
        }
    }
}

impl DiscreteDistribution {
    /// Builds a canonical distribution: sorts by value, merges duplicate values by
    /// summing their probabilities, and renormalizes the total to one.
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("values", "support must be nonempty"));
        }
        if values.len() != probs.len() {
            return Err(Error::validation(
                "probs",
                format!(
                    "length {} does not match {} values",
                    probs.len(),
                    values.len()
                ),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::validation(
                "values",
                format!("{v} is not a finite nonnegative number"),
            ));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p <= 0.0) {
            return Err(Error::validation(
                "probs",
                format!("{p} is not a finite positive probability"),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::validation(
                "probs",
                format!("probabilities sum to {total}, not 1"),
            ));
        }

        let mut atoms: Vec<(f64, f64)> = values.into_iter().zip(probs).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let (values, mut probs): (Vec<f64>, Vec<f64>) = merged.into_iter().unzip();
        for p in &mut probs {
            *p /= total;
        }
        Ok(DiscreteDistribution { values, probs })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().expect("support is nonempty")
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    /// `P(X >= u)`; an atom at `u` counts.
    pub fn tail(&self, u: f64) -> f64 {
        let start = self.values.partition_point(|&v| v < u);
        self.probs[start..].iter().sum()
    }

    pub fn expectation(&self) -> f64 {
        self.atoms().map(|(v, p)| v * p).sum()
    }

    /// Same distribution with every value multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::validation(
                "factor",
                format!("{factor} is not a finite positive scale"),
            ));
        }
        Ok(DiscreteDistribution {
            values: self.values.iter().map(|v| v * factor).collect(),
            probs: self.probs.clone(),
        })
    }

    /// Replaces the probability vector while keeping the support.
    pub fn with_probs(&self, probs: Vec<f64>) -> Result<Self> {
        DiscreteDistribution::new(self.values.clone(), probs)
    }
}

/// `E[min(X, Y)]` for independent `X ~ d1`, `Y ~ d2`, by enumerating the product support.
pub fn expected_min(d1: &DiscreteDistribution, d2: &DiscreteDistribution) -> f64 {
    d1.atoms()
        .map(|(x, px)| px * d2.atoms().map(|(y, py)| py * x.min(y)).sum::<f64>())
        .sum()
}

/// `E[min(X, Y)]` as the survival integral `∫ P(X >= u) P(Y >= u) du`.
///
/// Both tails are constant on each interval `(b_{k-1}, b_k]` between consecutive
/// support points (with `b_0 = 0`), so the integral is a finite sum.
pub fn expected_min_by_survival(d1: &DiscreteDistribution, d2: &DiscreteDistribution) -> f64 {
    let mut breaks: Vec<f64> = d1.values.iter().chain(&d2.values).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut prev = 0.0;
    let mut total = 0.0;
    for b in breaks {
        if b > prev {
            total += (b - prev) * d1.tail(b) * d2.tail(b);
        }
        prev = b;
    }
    total
}

pub fn point_mass(value: f64) -> Result<DiscreteDistribution> {
    DiscreteDistribution::new(vec![value], vec![1.0])
}

/// Equal probability on each listed value (duplicates accumulate mass).
pub fn uniform_on(values: &[f64]) -> Result<DiscreteDistribution> {
    if values.is_empty() {
        return Err(Error::validation("values", "support must be nonempty"));
    }
    let p = 1.0 / values.len() as f64;
    DiscreteDistribution::new(values.to_vec(), vec![p; values.len()])
}

/// Support `{base, 2 base, ..., 2^(n-1) base}` with `P(X >= base 2^i) = 2^-i`, so
/// every support point yields the same posted-price revenue `base`.
pub fn equal_revenue_discrete(n: usize, base: f64) -> Result<DiscreteDistribution> {
    if n == 0 {
        return Err(Error::validation("n", "support size must be at least 1"));
    }
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::validation("base", format!("{base} must be positive")));
    }
    let n_i32 = i32::try_from(n).map_err(|_| Error::validation("n", "support size too large"))?;
    let values: Vec<f64> = (0..n_i32).map(|i| base * 2f64.powi(i)).collect();
    let mut probs: Vec<f64> = (0..n_i32).map(|i| 2f64.powi(-(i + 1))).collect();
    // the top atom carries the whole remaining tail
    probs[n - 1] = 2f64.powi(-(n_i32 - 1));
    DiscreteDistribution::new(values, probs)
}

/// A random distribution with `support_size` values drawn uniformly from
/// `value_range` and random positive weights. Deterministic for a given RNG state.
pub fn random_distribution<R: Rng + ?Sized>(
    rng: &mut R,
    support_size: usize,
    value_range: (f64, f64),
) -> Result<DiscreteDistribution> {
    let (lo, hi) = value_range;
    if support_size == 0 {
        return Err(Error::validation("support_size", "must be at least 1"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::validation(
            "value_range",
            format!("[{lo}, {hi}] must satisfy 0 <= lo < hi"),
        ));
    }
    let values: Vec<f64> = (0..support_size)
        .map(|_| rng.random_range(lo..=hi))
        .collect();
    let weights: Vec<f64> = (0..support_size)
        .map(|_| 1.0 - rng.random::<f64>())
        .collect();
    let total: f64 = weights.iter().sum();
    DiscreteDistribution::new(values, weights.into_iter().map(|w| w / total).collect())
}
