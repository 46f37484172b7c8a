//! Two-item mechanisms on a finite product type space.
//!
//! For a finite type grid, the best revenue over all incentive-compatible and
//! individually-rational mechanisms is the optimum of a linear program over
//! allocations and buyer utilities; menus with randomized entries are covered
//! because allocations are fractional.

use serde::{Deserialize, Serialize};

use crate::distribution::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::lp::{solve_lp_via_dual, LinearProgram, LpStatus, Relation, SolverOptions, VarBounds};
use crate::myerson::optimal_price;

/// Default cap on the number of product types `n1 * n2`. The program has
/// `types * (types - 1)` incentive constraints.
pub const DEFAULT_GRID_LIMIT: usize = 200;

/// Two independent item-value distributions; the buyer's type is `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductInstance {
    pub d1: DiscreteDistribution,
    pub d2: DiscreteDistribution,
}

impl ProductInstance {
    pub fn new(d1: DiscreteDistribution, d2: DiscreteDistribution) -> Self {
        ProductInstance { d1, d2 }
    }

    pub fn swapped(&self) -> Self {
        ProductInstance::new(self.d2.clone(), self.d1.clone())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d1.len(), self.d2.len())
    }

    pub fn num_types(&self) -> usize {
        self.d1.len() * self.d2.len()
    }

    /// `(x, y, f(x, y))` in row-major order: index `i * n2 + j`.
    pub fn types(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.d1
            .atoms()
            .flat_map(move |(x, px)| self.d2.atoms().map(move |(y, py)| (x, y, px * py)))
    }

    /// `E[X + Y]`, the revenue from extracting the entire surplus.
    pub fn full_surplus(&self) -> f64 {
        self.d1.expectation() + self.d2.expectation()
    }
}

/// Allocation probabilities and payments per type, stored row-major over the
/// `n1 x n2` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub n1: usize,
    pub n2: usize,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub s: Vec<f64>,
}

impl Mechanism {
    fn zeros(n1: usize, n2: usize) -> Self {
        Mechanism {
            n1,
            n2,
            q1: vec![0.0; n1 * n2],
            q2: vec![0.0; n1 * n2],
            s: vec![0.0; n1 * n2],
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    /// Expected revenue `sum f(t) s(t)` under `inst`.
    pub fn revenue(&self, inst: &ProductInstance) -> f64 {
        inst.types().zip(&self.s).map(|((_, _, f), s)| f * s).sum()
    }
}

fn check_grid(inst: &ProductInstance, limit: usize) -> Result<()> {
    let types = inst.num_types();
    if types > limit {
        return Err(Error::GridTooLarge { types, limit });
    }
    Ok(())
}

/// Variable layout of the revenue program for a grid of `types` cells.
#[derive(Debug, Clone, Copy)]
pub struct RevenueLpLayout {
    pub types: usize,
}

impl RevenueLpLayout {
    pub fn q1(&self, t: usize) -> usize {
        t
    }
    pub fn q2(&self, t: usize) -> usize {
        self.types + t
    }
    pub fn u(&self, t: usize) -> usize {
        2 * self.types + t
    }
}

/// Revenue-maximization program over allocations `q1, q2 in [0, 1]` and buyer
/// utilities `u >= 0` (individual rationality). Payments are recovered as
/// `s = x q1 + y q2 - u`. For every ordered pair of distinct types `t, t'`:
///
/// `u(t) >= u(t') + (x - x') q1(t') + (y - y') q2(t')`
///
/// which is the truthful-reporting constraint rewritten in utilities.
pub fn build_revenue_lp(inst: &ProductInstance, grid_limit: usize) -> Result<LinearProgram> {
    check_grid(inst, grid_limit)?;
    let types: Vec<(f64, f64, f64)> = inst.types().collect();
    let nt = types.len();
    let layout = RevenueLpLayout { types: nt };
    let (_, n2) = inst.dims();

    let mut lp = LinearProgram::new(3 * nt);
    lp.constraints.reserve(nt * nt.saturating_sub(1));
    lp.names = vec![String::new(); 3 * nt];
    for (t, &(x, y, f)) in types.iter().enumerate() {
        let (i, j) = (t / n2, t % n2);
        lp.objective[layout.q1(t)] = f * x;
        lp.objective[layout.q2(t)] = f * y;
        lp.objective[layout.u(t)] = -f;
        lp.bounds[layout.q1(t)] = VarBounds::UNIT;
        lp.bounds[layout.q2(t)] = VarBounds::UNIT;
        lp.bounds[layout.u(t)] = VarBounds::NONNEGATIVE;
        lp.names[layout.q1(t)] = format!("q1_{i}_{j}");
        lp.names[layout.q2(t)] = format!("q2_{i}_{j}");
        lp.names[layout.u(t)] = format!("u_{i}_{j}");
    }
    for (t, &(x, y, _)) in types.iter().enumerate() {
        for (tp, &(xp, yp, _)) in types.iter().enumerate() {
            if t == tp {
                continue;
            }
            lp.add_constraint(
                vec![
                    (layout.u(t), 1.0),
                    (layout.u(tp), -1.0),
                    (layout.q1(tp), -(x - xp)),
                    (layout.q2(tp), -(y - yp)),
                ],
                Relation::Ge,
                0.0,
            );
        }
    }
    Ok(lp)
}

/// Optimal two-item revenue and a mechanism attaining it.
pub fn optimal_revenue(inst: &ProductInstance) -> Result<(f64, Mechanism)> {
    optimal_revenue_with_limit(inst, DEFAULT_GRID_LIMIT)
}

pub fn optimal_revenue_with_limit(
    inst: &ProductInstance,
    grid_limit: usize,
) -> Result<(f64, Mechanism)> {
    let lp = build_revenue_lp(inst, grid_limit)?;
    // every incentive row has a zero right-hand side, so the primal simplex would
    // stall on degenerate pivots; the dual has one row per variable instead
    let sol = solve_lp_via_dual(&lp, &SolverOptions::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal(sol.status));
    }
    let (n1, n2) = inst.dims();
    let layout = RevenueLpLayout { types: n1 * n2 };
    let mut mech = Mechanism::zeros(n1, n2);
    for (t, (x, y, _)) in inst.types().enumerate() {
        let q1 = sol.assignment[layout.q1(t)];
        let q2 = sol.assignment[layout.q2(t)];
        let u = sol.assignment[layout.u(t)];
        mech.q1[t] = q1;
        mech.q2[t] = q2;
        mech.s[t] = x * q1 + y * q2 - u;
    }
    Ok((sol.objective_value, mech))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// `max over t, t' of [utility from misreporting t'] - [truthful utility]`.
    pub max_ic_violation: f64,
    /// `max over t of -(truthful utility)`.
    pub max_ir_violation: f64,
    /// Largest distance of any allocation probability outside `[0, 1]`.
    pub max_allocation_violation: f64,
    pub revenue: f64,
}

impl VerificationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_ic_violation <= tol
            && self.max_ir_violation <= tol
            && self.max_allocation_violation <= tol
    }
}

/// Exhaustive check of every pairwise incentive constraint and every
/// participation constraint.
pub fn verify_mechanism(inst: &ProductInstance, mech: &Mechanism) -> Result<VerificationReport> {
    let (n1, n2) = inst.dims();
    if (mech.n1, mech.n2) != (n1, n2)
        || [&mech.q1, &mech.q2, &mech.s]
            .iter()
            .any(|v| v.len() != n1 * n2)
    {
        return Err(Error::validation(
            "mechanism",
            format!("grid does not match the {n1}x{n2} instance"),
        ));
    }
    let types: Vec<(f64, f64, f64)> = inst.types().collect();
    let utility = |x: f64, y: f64, t: usize| x * mech.q1[t] + y * mech.q2[t] - mech.s[t];

    let mut ic: f64 = f64::NEG_INFINITY;
    let mut ir: f64 = f64::NEG_INFINITY;
    let mut alloc: f64 = 0.0;
    for (t, &(x, y, _)) in types.iter().enumerate() {
        let truthful = utility(x, y, t);
        ir = ir.max(-truthful);
        for tp in 0..types.len() {
            if tp != t {
                ic = ic.max(utility(x, y, tp) - truthful);
            }
        }
        for q in [mech.q1[t], mech.q2[t]] {
            alloc = alloc.max(-q).max(q - 1.0);
        }
    }
    Ok(VerificationReport {
        max_ic_violation: if types.len() > 1 { ic } else { 0.0 },
        max_ir_violation: ir,
        max_allocation_violation: alloc,
        revenue: mech.revenue(inst),
    })
}

/// Revenue of pricing each item at its own optimal posted price, with the
/// corresponding deterministic mechanism.
pub fn separate_sale_revenue(inst: &ProductInstance) -> (f64, Mechanism) {
    let m1 = optimal_price(&inst.d1);
    let m2 = optimal_price(&inst.d2);
    let (n1, n2) = inst.dims();
    let mut mech = Mechanism::zeros(n1, n2);
    for (t, (x, y, _)) in inst.types().enumerate() {
        let buys1 = x >= m1.price;
        let buys2 = y >= m2.price;
        mech.q1[t] = if buys1 { 1.0 } else { 0.0 };
        mech.q2[t] = if buys2 { 1.0 } else { 0.0 };
        mech.s[t] = if buys1 { m1.price } else { 0.0 } + if buys2 { m2.price } else { 0.0 };
    }
    (m1.revenue + m2.revenue, mech)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleOffer {
    pub price: f64,
    pub revenue: f64,
}

/// Best single price for the pair, searched over every grid sum `x + y`.
/// Ties go to the smallest price.
pub fn bundle_revenue(inst: &ProductInstance) -> BundleOffer {
    let mut sums: Vec<(f64, f64)> = inst.types().map(|(x, y, f)| (x + y, f)).collect();
    sums.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = BundleOffer {
        price: 0.0,
        revenue: 0.0,
    };
    let mut tail: f64 = sums.iter().map(|s| s.1).sum();
    let mut k = 0;
    while k < sums.len() {
        let price = sums[k].0;
        let revenue = price * tail;
        if revenue > best.revenue {
            best = BundleOffer { price, revenue };
        }
        while k < sums.len() && sums[k].0 == price {
            tail -= sums[k].1;
            k += 1;
        }
    }
    best
}
