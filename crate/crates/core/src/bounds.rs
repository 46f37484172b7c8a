//! Separate-sale approximation bounds and their two supporting inequalities.
//!
//! With per-item optimal revenues `r1 >= r2 > 0` and `alpha = r1 / r2`, the chain
//!
//! ```text
//! Rev <= r1 + r2 + E[min(X, Y)]          (mechanism restriction)
//!     <= r1 + (3 + ln alpha) r2          (E[min] <= (2 + ln alpha) r2)
//!      = g(alpha) (r1 + r2)              (algebra)
//! ```
//!
//! bounds the two-item optimum by `g(alpha) = 2 - (alpha - 1 - ln alpha) / (1 + alpha)`
//! times the separate-sale revenue. Each link is checked numerically here.

use serde::{Deserialize, Serialize};

use crate::distribution::expected_min;
use crate::error::{Error, Result};
use crate::mechanism::{optimal_revenue_with_limit, ProductInstance, DEFAULT_GRID_LIMIT};
use crate::myerson::optimal_price;

/// Slack threshold for every bound check; matches the mechanism verification tolerance.
pub const CHECK_TOL: f64 = 1e-7;

/// `g(alpha) = 2 - (alpha - 1 - ln alpha) / (1 + alpha)` for `alpha >= 1`.
pub fn guarantee_factor(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 1.0 || alpha.is_infinite() {
        return Err(Error::Domain(alpha));
    }
    let excess = alpha - 1.0;
    Ok(2.0 - (excess - excess.ln_1p()) / (1.0 + alpha))
}

/// Per-item optimal revenues ordered so that the first is the larger, plus
/// whether the items had to be swapped for that.
fn ordered_revenues(inst: &ProductInstance) -> (f64, f64, bool) {
    let a = optimal_price(&inst.d1).revenue;
    let b = optimal_price(&inst.d2).revenue;
    if a >= b {
        (a, b, false)
    } else {
        (b, a, true)
    }
}

fn lemma1_slack(r1: f64, r2: f64, emin: f64, rev: f64) -> f64 {
    r1 + r2 + emin - rev
}

fn lemma2_slack(r1: f64, r2: f64, emin: f64) -> f64 {
    (2.0 + (r1 / r2).ln()) * r2 - emin
}

fn theorem_slack(g_alpha: f64, srev: f64, rev: f64) -> f64 {
    g_alpha * srev - rev
}

/// `r1 + r2 + E[min(X, Y)] - rev`; nonnegative whenever `rev` is achievable.
pub fn check_lemma1(inst: &ProductInstance, rev: f64) -> f64 {
    let (r1, r2, _) = ordered_revenues(inst);
    lemma1_slack(r1, r2, expected_min(&inst.d1, &inst.d2), rev)
}

/// `(2 + ln(r1 / r2)) r2 - E[min(X, Y)]` with `r1 >= r2`.
pub fn check_lemma2(inst: &ProductInstance) -> Result<f64> {
    let (r1, r2, _) = ordered_revenues(inst);
    if r2 <= 0.0 {
        return Err(Error::DegenerateInstance);
    }
    Ok(lemma2_slack(r1, r2, expected_min(&inst.d1, &inst.d2)))
}

/// `g(alpha) (r1 + r2) - rev`.
pub fn check_theorem(inst: &ProductInstance, rev: f64) -> Result<f64> {
    let (r1, r2, _) = ordered_revenues(inst);
    if r2 <= 0.0 {
        return Err(Error::DegenerateInstance);
    }
    Ok(theorem_slack(guarantee_factor(r1 / r2)?, r1 + r2, rev))
}

/// `|r1 + (3 + ln(r1/r2)) r2 - g(r1/r2) (r1 + r2)|`, the residual of the final
/// algebraic step. Requires `r1 >= r2 > 0`.
pub fn algebraic_identity_check(r1: f64, r2: f64) -> Result<f64> {
    if !(r2 > 0.0 && r1 >= r2 && r1.is_finite()) {
        return Err(Error::validation(
            "revenues",
            format!("need r1 >= r2 > 0, got r1 = {r1}, r2 = {r2}"),
        ));
    }
    let alpha = r1 / r2;
    Ok((r1 + (3.0 + alpha.ln()) * r2 - guarantee_factor(alpha)? * (r1 + r2)).abs())
}

/// Per-instance summary of both item revenues, the two-item optimum, and the
/// slack of each bound. A slack of at least `-CHECK_TOL` is a pass.
///
/// Items are relabeled so that `r1 >= r2`; the instance itself is left alone and
/// `labels_swapped` records the relabeling. When `r2 = 0` the ratio is
/// undefined: `degenerate` is set and the ratio-dependent fields are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub r1: f64,
    pub r2: f64,
    pub alpha: Option<f64>,
    pub srev: f64,
    pub rev: f64,
    pub emin: f64,
    pub g_alpha: Option<f64>,
    pub theorem_slack: Option<f64>,
    pub lemma1_slack: f64,
    pub lemma2_slack: Option<f64>,
    pub labels_swapped: bool,
    pub degenerate: bool,
}

impl BoundReport {
    pub fn from_parts(r1: f64, r2: f64, rev: f64, emin: f64, labels_swapped: bool) -> Result<Self> {
        let srev = r1 + r2;
        let degenerate = r2 <= 0.0;
        let (alpha, g_alpha, theorem, lemma2) = if degenerate {
            (None, None, None, None)
        } else {
            let alpha = r1 / r2;
            let g = guarantee_factor(alpha)?;
            (
                Some(alpha),
                Some(g),
                Some(theorem_slack(g, srev, rev)),
                Some(lemma2_slack(r1, r2, emin)),
            )
        };
        Ok(BoundReport {
            r1,
            r2,
            alpha,
            srev,
            rev,
            emin,
            g_alpha,
            theorem_slack: theorem,
            lemma1_slack: lemma1_slack(r1, r2, emin, rev),
            lemma2_slack: lemma2,
            labels_swapped,
            degenerate,
        })
    }

    /// `Rev / SRev`.
    pub fn ratio(&self) -> f64 {
        self.rev / self.srev
    }

    /// Every applicable slack is at least `-tol`.
    pub fn passes(&self, tol: f64) -> bool {
        let ok = |s: f64| s >= -tol;
        ok(self.lemma1_slack)
            && self.theorem_slack.is_none_or(ok)
            && self.lemma2_slack.is_none_or(ok)
    }

    /// Largest discrepancy between a stored derived field and its recomputation
    /// from `r1`, `r2`, `rev`, and `emin`.
    pub fn consistency_residual(&self) -> f64 {
        let Ok(fresh) =
            BoundReport::from_parts(self.r1, self.r2, self.rev, self.emin, self.labels_swapped)
        else {
            return f64::INFINITY;
        };
        let diff = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        [
            (self.srev - fresh.srev).abs(),
            (self.lemma1_slack - fresh.lemma1_slack).abs(),
            diff(self.alpha, fresh.alpha),
            diff(self.g_alpha, fresh.g_alpha),
            diff(self.theorem_slack, fresh.theorem_slack),
            diff(self.lemma2_slack, fresh.lemma2_slack),
            if self.degenerate == fresh.degenerate { 0.0 } else { f64::INFINITY },
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Slack of each link in `rev <= r1 + r2 + emin <= r1 + (3 + ln alpha) r2 = g srev`;
    /// the last entry is the negated residual of the closing identity.
    pub fn chain_links(&self) -> Option<[f64; 3]> {
        let residual = algebraic_identity_check(self.r1, self.r2).ok()?;
        Some([self.lemma1_slack, self.lemma2_slack?, -residual])
    }

    /// Header line plus one CSV row; `None` fields are left empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.serialize(self).map_err(|e| Error::Output(e.to_string()))?;
        let bytes = writer.into_inner().map_err(|e| Error::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Output(e.to_string()))
    }
}

/// Runs every check on `inst` with the default grid limit.
pub fn analyze(inst: &ProductInstance) -> Result<BoundReport> {
    analyze_with_limit(inst, DEFAULT_GRID_LIMIT)
}

pub fn analyze_with_limit(inst: &ProductInstance, grid_limit: usize) -> Result<BoundReport> {
    let (rev, _) = optimal_revenue_with_limit(inst, grid_limit)?;
    report_for_revenue(inst, rev)
}

/// Report for an already computed two-item revenue.
pub fn report_for_revenue(inst: &ProductInstance, rev: f64) -> Result<BoundReport> {
    let (r1, r2, swapped) = ordered_revenues(inst);
    BoundReport::from_parts(r1, r2, rev, expected_min(&inst.d1, &inst.d2), swapped)
}
