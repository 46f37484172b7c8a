//! Optimal posted price for a single item.
//!
//! Under the "at least" tail convention, `p * P(X >= p)` is linear and increasing
//! in `p` on each interval `(v_{k-1}, v_k]` between support points, because the
//! tail is constant there. The maximum over all prices is therefore attained at a
//! support point, and searching the support is exhaustive.

use serde::{Deserialize, Serialize};

use crate::distribution::DiscreteDistribution;

/// Relative tolerance used to decide that two support prices tie.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MyersonResult {
    /// Smallest revenue-maximizing support price.
    pub price: f64,
    pub revenue: f64,
    /// All support prices attaining the maximum, ascending.
    pub argmax_prices: Vec<f64>,
}

/// Expected revenue of a take-it-or-leave-it offer at `price`.
pub fn revenue_at_price(d: &DiscreteDistribution, price: f64) -> f64 {
    price * d.tail(price)
}

pub fn optimal_price(d: &DiscreteDistribution) -> MyersonResult {
    // suffix sums give every support tail in one pass
    let mut tails = vec![0.0; d.len()];
    let mut acc = 0.0;
    for (k, p) in d.probs().iter().enumerate().rev() {
        acc += p;
        tails[k] = acc;
    }
    let revenues: Vec<f64> = d.values().iter().zip(&tails).map(|(v, t)| v * t).collect();
    let best = revenues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cutoff = best - TIE_TOL * best.abs().max(1.0);
    let argmax_prices: Vec<f64> = d
        .values()
        .iter()
        .zip(&revenues)
        .filter(|(_, r)| **r >= cutoff)
        .map(|(v, _)| *v)
        .collect();
    let price = argmax_prices[0];
    MyersonResult {
        price,
        revenue: revenue_at_price(d, price),
        argmax_prices,
    }
}

/// Largest excess of `u * P(X >= u)` over `revenue` across the support. For the
/// item's own optimal revenue this is at most zero.
pub fn tail_revenue_check(d: &DiscreteDistribution, revenue: f64) -> f64 {
    d.values()
        .iter()
        .map(|&u| revenue_at_price(d, u) - revenue)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{equal_revenue_discrete, point_mass};

    fn dist(values: &[f64], probs: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(values.to_vec(), probs.to_vec()).unwrap()
    }

    #[test]
    fn revenue_at_price_examples() {
        assert_eq!(revenue_at_price(&point_mass(5.0).unwrap(), 5.0), 5.0);
        assert_eq!(revenue_at_price(&dist(&[1.0, 2.0], &[0.5, 0.5]), 2.0), 1.0);
        let d = dist(&[1.0, 2.0, 4.0], &[0.5, 0.25, 0.25]);
        assert_eq!(revenue_at_price(&d, 4.0), 1.0);
        assert_eq!(revenue_at_price(&d, 4.5), 0.0);
    }

    #[test]
    fn ties_break_to_smallest_price() {
        let r = optimal_price(&dist(&[1.0, 2.0], &[0.5, 0.5]));
        assert_eq!(r.price, 1.0);
        assert_eq!(r.revenue, 1.0);
        assert_eq!(r.argmax_prices, vec![1.0, 2.0]);

        let r = optimal_price(&equal_revenue_discrete(3, 1.0).unwrap());
        assert_eq!((r.price, r.revenue), (1.0, 1.0));
        assert_eq!(r.argmax_prices, vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn point_mass_sells_at_its_value() {
        let r = optimal_price(&point_mass(7.5).unwrap());
        assert_eq!((r.price, r.revenue), (7.5, 7.5));
        assert_eq!(tail_revenue_check(&point_mass(5.0).unwrap(), 5.0), 0.0);
    }

    #[test]
    fn interior_optimum() {
        // revenues 1, 2*0.9 = 1.8, 10*0.1 = 1
        let r = optimal_price(&dist(&[1.0, 2.0, 10.0], &[0.1, 0.8, 0.1]));
        assert_eq!(r.price, 2.0);
        assert!((r.revenue - 1.8).abs() < 1e-15);
        assert_eq!(r.argmax_prices, vec![2.0]);
    }

    #[test]
    fn equal_revenue_has_zero_tail_violation() {
        let d = equal_revenue_discrete(4, 1.0).unwrap();
        for &u in d.values() {
            assert_eq!(revenue_at_price(&d, u), 1.0);
        }
        assert_eq!(tail_revenue_check(&d, 1.0), 0.0);
    }
}
