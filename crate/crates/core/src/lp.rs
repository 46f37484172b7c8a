//! Dense primal simplex for small maximization problems.
//!
//! The solver keeps a condensed tableau: one row per constraint and one column
//! per nonbasic variable, so slack columns never materialize. Row `i` reads
//! `x_B(i) + sum_j a[i][j] x_N(j) = rhs[i]` and the objective reads
//! `z = z0 + sum_j d[j] x_N(j)`. Infeasible starting points go through a
//! phase-one problem over artificial variables.
//!
//! Pricing picks the column with the largest reduced cost. As soon as a pivot
//! fails to move the objective, the solver switches to Bland's smallest-index
//! rule for both the entering and the leaving variable and stays there until the
//! objective moves again, which rules out cycling on degenerate vertices.
//! [`Pricing::Bland`] uses the smallest-index rule throughout.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivots whose primal step is at most this are treated as degenerate.
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBound {
    #[default]
    Zero,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperBound {
    One,
    #[default]
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VarBounds {
    #[serde(default)]
    pub lower: LowerBound,
    #[serde(default)]
    pub upper: UpperBound,
}

impl VarBounds {
    pub const UNIT: VarBounds = VarBounds {
        lower: LowerBound::Zero,
        upper: UpperBound::One,
    };
    pub const NONNEGATIVE: VarBounds = VarBounds {
        lower: LowerBound::Zero,
        upper: UpperBound::Unbounded,
    };
    pub const FREE: VarBounds = VarBounds {
        lower: LowerBound::Free,
        upper: UpperBound::Unbounded,
    };

    fn lower_value(self) -> f64 {
        match self.lower {
            LowerBound::Zero => 0.0,
            LowerBound::Free => f64::NEG_INFINITY,
        }
    }

    fn upper_value(self) -> f64 {
        match self.upper {
            UpperBound::One => 1.0,
            UpperBound::Unbounded => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// Sparse row as `(variable index, coefficient)` pairs; repeated indices add up.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize objective . x` subject to the constraints and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    /// One entry per variable; an empty list means every variable is `>= 0`.
    #[serde(default)]
    pub bounds: Vec<VarBounds>,
    /// Optional variable names used by [`LinearProgram::to_text`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            bounds: vec![VarBounds::NONNEGATIVE; num_vars],
            names: Vec::new(),
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn bounds_of(&self, var: usize) -> VarBounds {
        self.bounds.get(var).copied().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::validation(
                "objective",
                format!(
                    "has {} coefficients for {} variables",
                    self.objective.len(),
                    self.num_vars
                ),
            ));
        }
        if !self.bounds.is_empty() && self.bounds.len() != self.num_vars {
            return Err(Error::validation(
                "bounds",
                format!("has {} entries for {} variables", self.bounds.len(), self.num_vars),
            ));
        }
        if !self.names.is_empty() && self.names.len() != self.num_vars {
            return Err(Error::validation(
                "names",
                format!("has {} entries for {} variables", self.names.len(), self.num_vars),
            ));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("objective", "coefficients must be finite"));
        }
        for (k, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(Error::validation(
                    "constraints",
                    format!("row {k} has a non-finite right-hand side"),
                ));
            }
            for &(var, coef) in &con.coeffs {
                if var >= self.num_vars {
                    return Err(Error::validation(
                        "constraints",
                        format!("row {k} references variable {var} of {}", self.num_vars),
                    ));
                }
                if !coef.is_finite() {
                    return Err(Error::validation(
                        "constraints",
                        format!("row {k} has a non-finite coefficient"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn name(&self, var: usize) -> String {
        self.names
            .get(var)
            .cloned()
            .unwrap_or_else(|| format!("x{var}"))
    }

    fn terms(&self, coeffs: impl Iterator<Item = (usize, f64)>) -> String {
        let terms: Vec<String> = coeffs
            .filter(|(_, c)| *c != 0.0)
            .map(|(v, c)| format!("{c}*{}", self.name(v)))
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" ")
        }
    }

    /// Plain-text dump: an objective line, one line per constraint in the form
    /// `coef*var ... <= rhs`, then one line per bounded variable.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "max: {}",
            self.terms(self.objective.iter().copied().enumerate())
        );
        for con in &self.constraints {
            let _ = writeln!(
                out,
                "{} {} {}",
                self.terms(con.coeffs.iter().copied()),
                con.relation.symbol(),
                con.rhs
            );
        }
        for var in 0..self.num_vars {
            let b = self.bounds_of(var);
            let lo = match b.lower {
                LowerBound::Zero => "0",
                LowerBound::Free => "-inf",
            };
            let hi = match b.upper {
                UpperBound::One => "1",
                UpperBound::Unbounded => "inf",
            };
            let _ = writeln!(out, "{lo} <= {} <= {hi}", self.name(var));
        }
        out
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for con in &self.constraints {
            let lhs: f64 = con.coeffs.iter().map(|&(v, c)| c * x[v]).sum();
            let viol = match con.relation {
                Relation::Le => lhs - con.rhs,
                Relation::Ge => con.rhs - lhs,
                Relation::Eq => (lhs - con.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for (var, &value) in x.iter().enumerate() {
            let b = self.bounds_of(var);
            worst = worst
                .max(b.lower_value() - value)
                .max(value - b.upper_value());
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// The dual program, written as a maximization of `-(b . y)`.
    ///
    /// Dual variables come first one per constraint (`<=` rows give `y >= 0`,
    /// `>=` rows give `-y >= 0`, equalities give free `y`), followed by one
    /// nonnegative variable per unit upper bound. Each primal variable yields one
    /// dual row: `>=` its objective coefficient, or `=` when the variable is free.
    pub fn dual(&self) -> LinearProgram {
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_vars];
        let mut cost = Vec::new();
        let mut bounds = Vec::new();
        for (i, con) in self.constraints.iter().enumerate() {
            let sign = if con.relation == Relation::Ge { -1.0 } else { 1.0 };
            for &(var, coef) in &con.coeffs {
                columns[var].push((i, sign * coef));
            }
            cost.push(-sign * con.rhs);
            bounds.push(if con.relation == Relation::Eq {
                VarBounds::FREE
            } else {
                VarBounds::NONNEGATIVE
            });
        }
        for (var, column) in columns.iter_mut().enumerate() {
            if self.bounds_of(var).upper == UpperBound::One {
                column.push((cost.len(), 1.0));
                cost.push(-1.0);
                bounds.push(VarBounds::NONNEGATIVE);
            }
        }
        let mut dual = LinearProgram::new(cost.len());
        dual.objective = cost;
        dual.bounds = bounds;
        for (var, column) in columns.into_iter().enumerate() {
            let relation = match self.bounds_of(var).lower {
                LowerBound::Zero => Relation::Ge,
                LowerBound::Free => Relation::Eq,
            };
            dual.add_constraint(column, relation, self.objective[var]);
        }
        dual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective at `assignment`.
    pub objective_value: f64,
    /// Last primal point reached (optimal only when `status` is `Optimal`).
    pub assignment: Vec<f64>,
    /// Shadow price `d(objective) / d(rhs)` of each constraint, in the
    /// constraint's own orientation. Meaningful when `status` is `Optimal`.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pricing {
    /// Smallest-index rule on every pivot.
    Bland,
    /// Largest reduced cost, with Bland's rule during degenerate stretches.
    #[default]
    LargestCoefficient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Residual phase-one infeasibility tolerated, relative to the right-hand sides.
    pub feasibility_tol: f64,
    /// A column enters only if its reduced cost exceeds this.
    pub optimality_tol: f64,
    /// Smallest tableau entry accepted as a pivot in the ratio test.
    pub pivot_tol: f64,
    /// Pivots below this magnitude are a numerical breakdown.
    pub breakdown_tol: f64,
    /// Defaults to `50 * (num_vars + num_constraints)`.
    pub max_iterations: Option<usize>,
    pub pricing: Pricing,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            breakdown_tol: 1e-12,
            max_iterations: None,
            pricing: Pricing::default(),
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &SolverOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    lp.validate()?;
    let limit = opts
        .max_iterations
        .unwrap_or(50 * (lp.num_vars + lp.num_constraints()).max(1));
    let std = StandardForm::from_lp(lp);
    let mut tab = std.initial_tableau();
    let mut iterations = 0;

    if tab.has_artificial_rows(&std) {
        tab.load_phase_one_objective(&std);
        match tab.run(opts, limit, &mut iterations)? {
            Outcome::Optimal => {}
            Outcome::IterationLimit => {
                return Ok(std.solution(lp, &tab, LpStatus::IterationLimit, iterations))
            }
            // phase one is bounded above by zero
            Outcome::Unbounded => unreachable!("phase-one objective is bounded"),
        }
        let scale = 1.0 + std.rhs.iter().fold(0.0_f64, |m, b| m.max(b.abs()));
        if tab.obj_value < -opts.feasibility_tol * scale {
            return Ok(std.solution(lp, &tab, LpStatus::Infeasible, iterations));
        }
        tab.drive_out_artificials(&std, opts)?;
    }

    tab.load_objective(&std);
    let status = match tab.run(opts, limit, &mut iterations)? {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterationLimit => LpStatus::IterationLimit,
    };
    Ok(std.solution(lp, &tab, status, iterations))
}

/// Solves `lp` by running the simplex on [`LinearProgram::dual`] and reading the
/// primal point off the dual's shadow prices.
///
/// Suited to programs with many constraints, few variables, and mostly zero
/// right-hand sides, where the primal is heavily degenerate but the dual is not.
/// An infeasible dual is reported as `Unbounded`; this presumes the primal
/// itself is feasible.
pub fn solve_lp_via_dual(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    lp.validate()?;
    let dual = lp.dual();
    let sol = solve_lp_with(&dual, opts)?;
    let status = match sol.status {
        LpStatus::Optimal => LpStatus::Optimal,
        LpStatus::Unbounded => LpStatus::Infeasible,
        LpStatus::Infeasible => LpStatus::Unbounded,
        LpStatus::IterationLimit => LpStatus::IterationLimit,
    };
    let assignment: Vec<f64> = (0..lp.num_vars)
        .map(|var| {
            let value = -sol.duals[var] + 0.0;
            let b = lp.bounds_of(var);
            value.clamp(b.lower_value(), b.upper_value())
        })
        .collect();
    let duals = lp
        .constraints
        .iter()
        .zip(&sol.assignment)
        .map(|(con, y)| if con.relation == Relation::Ge { -y } else { *y })
        .collect();
    Ok(LpSolution {
        status,
        objective_value: lp.objective_at(&assignment),
        assignment,
        duals,
        iterations: sol.iterations,
    })
}

/// The LP rewritten as `A x (<= | =) b`, `x >= 0`, with free variables split
/// and unit upper bounds turned into rows.
struct StandardForm {
    num_std: usize,
    /// Original variable -> (positive part, optional negative part).
    columns: Vec<(usize, Option<usize>)>,
    cost: Vec<f64>,
    rows: Vec<Vec<f64>>,
    is_equality: Vec<bool>,
    rhs: Vec<f64>,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl StandardForm {
    fn from_lp(lp: &LinearProgram) -> Self {
        let mut columns = Vec::with_capacity(lp.num_vars);
        let mut num_std = 0;
        for var in 0..lp.num_vars {
            let pos = num_std;
            num_std += 1;
            let neg = match lp.bounds_of(var).lower {
                LowerBound::Zero => None,
                LowerBound::Free => {
                    num_std += 1;
                    Some(pos + 1)
                }
            };
            columns.push((pos, neg));
        }
        let mut cost = vec![0.0; num_std];
        for (var, &(pos, neg)) in columns.iter().enumerate() {
            cost[pos] = lp.objective[var];
            if let Some(neg) = neg {
                cost[neg] = -lp.objective[var];
            }
        }

        let mut rows = Vec::new();
        let mut is_equality = Vec::new();
        let mut rhs = Vec::new();
        for con in &lp.constraints {
            let sign = if con.relation == Relation::Ge { -1.0 } else { 1.0 };
            let mut row = vec![0.0; num_std];
            for &(var, coef) in &con.coeffs {
                let (pos, neg) = columns[var];
                row[pos] += sign * coef;
                if let Some(neg) = neg {
                    row[neg] -= sign * coef;
                }
            }
            rows.push(row);
            is_equality.push(con.relation == Relation::Eq);
            rhs.push(sign * con.rhs);
        }
        for (var, &(pos, neg)) in columns.iter().enumerate() {
            if lp.bounds_of(var).upper == UpperBound::One {
                let mut row = vec![0.0; num_std];
                row[pos] = 1.0;
                if let Some(neg) = neg {
                    row[neg] = -1.0;
                }
                rows.push(row);
                is_equality.push(false);
                rhs.push(1.0);
            }
        }
        StandardForm {
            num_std,
            columns,
            cost,
            rows,
            is_equality,
            rhs,
        }
    }

    fn num_rows(&self) -> usize {
        self.rows.len()
    }

    // Variable ids: structural 0..n, then one slack per row, then one artificial per row.
    fn slack_id(&self, row: usize) -> usize {
        self.num_std + row
    }

    fn artificial_id(&self, row: usize) -> usize {
        self.num_std + self.num_rows() + row
    }

    fn is_artificial(&self, id: usize) -> bool {
        id >= self.num_std + self.num_rows()
    }

    fn cost_of(&self, id: usize) -> f64 {
        if id < self.num_std {
            self.cost[id]
        } else {
            0.0
        }
    }

    fn initial_tableau(&self) -> Tableau {
        let m = self.num_rows();
        // inequality rows with negative rhs keep their slack as a nonbasic surplus column
        let surplus_rows: Vec<usize> = (0..m)
            .filter(|&i| !self.is_equality[i] && self.rhs[i] < 0.0)
            .collect();
        let cols = self.num_std + surplus_rows.len();
        let mut nonbasic: Vec<usize> = (0..self.num_std).collect();
        nonbasic.extend(surplus_rows.iter().map(|&i| self.slack_id(i)));

        let mut a = vec![0.0; m * cols];
        let mut rhs = vec![0.0; m];
        let mut basic = vec![0; m];
        let mut surplus_col = self.num_std;
        for i in 0..m {
            let row = &mut a[i * cols..(i + 1) * cols];
            let flip = self.rhs[i] < 0.0;
            let sign = if flip { -1.0 } else { 1.0 };
            for (dst, src) in row.iter_mut().zip(&self.rows[i]) {
                *dst = sign * src;
            }
            rhs[i] = sign * self.rhs[i];
            if self.is_equality[i] {
                basic[i] = self.artificial_id(i);
            } else if flip {
                row[surplus_col] = -1.0;
                surplus_col += 1;
                basic[i] = self.artificial_id(i);
            } else {
                basic[i] = self.slack_id(i);
            }
        }
        Tableau {
            rows: m,
            cols,
            a,
            rhs,
            obj: vec![0.0; cols],
            obj_value: 0.0,
            blocked: vec![false; cols],
            basic,
            nonbasic,
        }
    }

    fn solution(
        &self,
        lp: &LinearProgram,
        tab: &Tableau,
        status: LpStatus,
        iterations: usize,
    ) -> LpSolution {
        let mut std_values = vec![0.0; self.num_std];
        for (i, &id) in tab.basic.iter().enumerate() {
            if id < self.num_std {
                std_values[id] = tab.rhs[i].max(0.0);
            }
        }
        let assignment: Vec<f64> = self
            .columns
            .iter()
            .enumerate()
            .map(|(var, &(pos, neg))| {
                let value = std_values[pos] - neg.map_or(0.0, |n| std_values[n]);
                match lp.bounds_of(var).upper {
                    UpperBound::One => value.min(1.0),
                    UpperBound::Unbounded => value,
                }
            })
            .collect();
        LpSolution {
            status,
            objective_value: lp.objective_at(&assignment),
            assignment,
            duals: self.duals(lp, tab),
            iterations,
        }
    }
}

impl StandardForm {
    /// Shadow prices read off the objective row: a nonbasic slack with reduced
    /// cost `d` prices its row at `-d`; basic slacks and dropped rows price at zero.
    fn duals(&self, lp: &LinearProgram, tab: &Tableau) -> Vec<f64> {
        let mut column_of = vec![None; self.num_std + 2 * self.num_rows()];
        for (j, &id) in tab.nonbasic.iter().enumerate() {
            column_of[id] = Some(j);
        }
        lp.constraints
            .iter()
            .enumerate()
            .map(|(i, con)| {
                let std_dual = if self.is_equality[i] {
                    let flip = if self.rhs[i] < 0.0 { -1.0 } else { 1.0 };
                    column_of[self.artificial_id(i)].map_or(0.0, |j| -flip * tab.obj[j])
                } else {
                    column_of[self.slack_id(i)].map_or(0.0, |j| -tab.obj[j])
                };
                let sign = if con.relation == Relation::Ge { -1.0 } else { 1.0 };
                sign * std_dual + 0.0
            })
            .collect()
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`.
    a: Vec<f64>,
    rhs: Vec<f64>,
    /// Reduced costs of the nonbasic columns.
    obj: Vec<f64>,
    obj_value: f64,
    /// Columns that may never enter (retired artificials).
    blocked: Vec<bool>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
}

impl Tableau {
    fn at(&self, row: usize, col: usize) -> f64 {
        self.a[row * self.cols + col]
    }

    fn has_artificial_rows(&self, std: &StandardForm) -> bool {
        self.basic.iter().any(|&id| std.is_artificial(id))
    }

    /// Maximize `-sum(artificials)`.
    fn load_phase_one_objective(&mut self, std: &StandardForm) {
        self.obj.iter_mut().for_each(|d| *d = 0.0);
        self.obj_value = 0.0;
        for i in 0..self.rows {
            if std.is_artificial(self.basic[i]) {
                self.obj_value -= self.rhs[i];
                for j in 0..self.cols {
                    self.obj[j] += self.a[i * self.cols + j];
                }
            }
        }
    }

    fn load_objective(&mut self, std: &StandardForm) {
        for j in 0..self.cols {
            self.obj[j] = std.cost_of(self.nonbasic[j]);
        }
        self.obj_value = 0.0;
        for i in 0..self.rows {
            let cb = std.cost_of(self.basic[i]);
            if cb == 0.0 {
                continue;
            }
            self.obj_value += cb * self.rhs[i];
            let row = &self.a[i * self.cols..(i + 1) * self.cols];
            for (d, t) in self.obj.iter_mut().zip(row) {
                *d -= cb * t;
            }
        }
    }

    /// After a feasible phase one, pivots zero-level artificials out of the basis,
    /// drops rows that turn out redundant, and retires artificial columns.
    fn drive_out_artificials(&mut self, std: &StandardForm, opts: &SolverOptions) -> Result<()> {
        let mut i = 0;
        while i < self.rows {
            if !std.is_artificial(self.basic[i]) {
                i += 1;
                continue;
            }
            let candidate = (0..self.cols)
                .filter(|&j| !self.blocked[j] && !std.is_artificial(self.nonbasic[j]))
                .filter(|&j| self.at(i, j).abs() > opts.pivot_tol)
                .min_by_key(|&j| self.nonbasic[j]);
            match candidate {
                Some(j) => {
                    self.rhs[i] = 0.0;
                    self.pivot(i, j, opts)?;
                    i += 1;
                }
                None => self.remove_row(i),
            }
        }
        for j in 0..self.cols {
            if std.is_artificial(self.nonbasic[j]) {
                self.blocked[j] = true;
            }
        }
        Ok(())
    }

    fn remove_row(&mut self, row: usize) {
        self.a.drain(row * self.cols..(row + 1) * self.cols);
        self.rhs.remove(row);
        self.basic.remove(row);
        self.rows -= 1;
    }

    fn run(&mut self, opts: &SolverOptions, limit: usize, iterations: &mut usize) -> Result<Outcome> {
        let mut bland = opts.pricing == Pricing::Bland;
        loop {
            let Some(enter) = self.entering(opts, bland) else {
                return Ok(Outcome::Optimal);
            };
            let Some(leave) = self.leaving(enter, opts, bland) else {
                return Ok(Outcome::Unbounded);
            };
            if *iterations >= limit {
                return Ok(Outcome::IterationLimit);
            }
            let step = self.rhs[leave].max(0.0) / self.at(leave, enter);
            if opts.pricing == Pricing::LargestCoefficient {
                bland = step <= DEGENERATE_STEP;
            }
            self.pivot(leave, enter, opts)?;
            *iterations += 1;
        }
    }

    fn entering(&self, opts: &SolverOptions, bland: bool) -> Option<usize> {
        let eligible = (0..self.cols).filter(|&j| !self.blocked[j] && self.obj[j] > opts.optimality_tol);
        if bland {
            eligible.min_by_key(|&j| self.nonbasic[j])
        } else {
            eligible.max_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]).then(self.nonbasic[b].cmp(&self.nonbasic[a])))
        }
    }

    /// Minimum-ratio row. Ties go to the basic variable with the smallest id under
    /// Bland's rule, otherwise to the largest pivot element.
    fn leaving(&self, col: usize, opts: &SolverOptions, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let t = self.at(i, col);
            if t <= opts.pivot_tol {
                continue;
            }
            let ratio = self.rhs[i].max(0.0) / t;
            best = match best {
                None => Some((i, ratio)),
                Some((r, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * br.abs().max(1.0);
                    let prefer = if tie {
                        if bland {
                            self.basic[i] < self.basic[r]
                        } else {
                            t > self.at(r, col)
                        }
                    } else {
                        ratio < br
                    };
                    if prefer {
                        Some((i, ratio))
                    } else {
                        Some((r, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, e: usize, opts: &SolverOptions) -> Result<()> {
        let cols = self.cols;
        let p = self.a[r * cols + e];
        if !p.is_finite() || p.abs() < opts.breakdown_tol {
            return Err(Error::DegeneratePivot {
                row: r,
                col: e,
                value: p,
            });
        }
        let inv = 1.0 / p;
        let (before, rest) = self.a.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        for v in pivot_row.iter_mut() {
            *v *= inv;
        }
        pivot_row[e] = inv;
        self.rhs[r] *= inv;
        let pivot_rhs = self.rhs[r];
        let support: Vec<usize> = (0..cols)
            .filter(|&j| j != e && pivot_row[j] != 0.0)
            .collect();

        let eliminate = |row: &mut [f64], rhs: &mut f64| {
            let f = row[e];
            if f == 0.0 {
                return;
            }
            for &j in &support {
                row[j] -= f * pivot_row[j];
            }
            row[e] = -f * inv;
            *rhs -= f * pivot_rhs;
        };
        for (i, row) in before.chunks_exact_mut(cols).enumerate() {
            eliminate(row, &mut self.rhs[i]);
        }
        for (k, row) in after.chunks_exact_mut(cols).enumerate() {
            eliminate(row, &mut self.rhs[r + 1 + k]);
        }

        let f = self.obj[e];
        if f != 0.0 {
            for &j in &support {
                self.obj[j] -= f * pivot_row[j];
            }
            self.obj[e] = -f * inv;
            self.obj_value += f * pivot_rhs;
        }
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[e]);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(lp: &LinearProgram) -> LpSolution {
        solve_lp(lp).unwrap()
    }

    #[test]
    fn single_upper_limit() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 3.0);
        let sol = solve(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unit_box_with_budget() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.bounds = vec![VarBounds::UNIT; 2];
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
        let sol = solve(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-12);
        assert!(lp.max_violation(&sol.assignment) <= 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 2.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        assert_eq!(solve(&lp).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve(&lp).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // max -x - y  s.t. x - y = -2, x free, y >= 0, y <= 5   -> x = y - 2, obj = -2y + 2 -> y = 0
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -1.0];
        lp.bounds = vec![VarBounds::FREE, VarBounds::NONNEGATIVE];
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Eq, -2.0);
        lp.add_constraint(vec![(1, 1.0)], Relation::Le, 5.0);
        let sol = solve(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.assignment[0] + 2.0).abs() < 1e-12);
        assert!(sol.assignment[1].abs() < 1e-12);
        assert!((sol.objective_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        // x + y = 1 stated twice; max x + 2y -> y = 1
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let sol = solve(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn classic_two_phase_problem() {
        // max 3x + 2y  s.t. x + y >= 2, x + 3y <= 6, x <= 4
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![3.0, 2.0];
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 2.0);
        lp.add_constraint(vec![(0, 1.0), (1, 3.0)], Relation::Le, 6.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 4.0);
        let sol = solve(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        // optimum at x = 4, y = 2/3
        assert!((sol.objective_value - (12.0 + 4.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Beale's problem cycles under the largest-coefficient rule without anti-cycling.
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![0.75, -20.0, 0.5, -6.0];
        lp.add_constraint(vec![(0, 0.25), (1, -8.0), (2, -1.0), (3, 9.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(0, 0.5), (1, -12.0), (2, -0.5), (3, 3.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(2, 1.0)], Relation::Le, 1.0);
        let sol = solve(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 1.25).abs() < 1e-12);
    }

    #[test]
    fn shadow_prices() {
        // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 7, x <= 3  -> x = 3, y = 1, obj 11
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![3.0, 2.0];
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 4.0);
        lp.add_constraint(vec![(0, 1.0), (1, 3.0)], Relation::Le, 7.0);
        lp.add_constraint(vec![(0, -1.0)], Relation::Ge, -3.0);
        let sol = solve(&lp);
        assert!((sol.objective_value - 11.0).abs() < 1e-12);
        // finite differences of the optimum in each right-hand side
        for (i, expected) in [2.0, 0.0, -1.0].into_iter().enumerate() {
            let mut bumped = lp.clone();
            bumped.constraints[i].rhs += 1e-3;
            let fd = (solve(&bumped).objective_value - sol.objective_value) / 1e-3;
            assert!((fd - expected).abs() < 1e-9, "row {i}: fd {fd}");
            assert!((sol.duals[i] - expected).abs() < 1e-12, "row {i}: {}", sol.duals[i]);
        }
    }

    #[test]
    fn equality_shadow_price_sign() {
        // max x + 2y  s.t. x + y = 3 (and reversed orientation), y <= 1
        for flip in [1.0, -1.0] {
            let mut lp = LinearProgram::new(2);
            lp.objective = vec![1.0, 2.0];
            lp.add_constraint(vec![(0, flip), (1, flip)], Relation::Eq, 3.0 * flip);
            lp.add_constraint(vec![(1, 1.0)], Relation::Le, 1.0);
            let sol = solve(&lp);
            assert!((sol.objective_value - 4.0).abs() < 1e-12);
            assert!((sol.duals[0] - flip).abs() < 1e-12, "flip {flip}: {:?}", sol.duals);
            assert!((sol.duals[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_route_matches_direct_solve() {
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![2.0, 1.0, -1.0];
        lp.bounds = vec![VarBounds::UNIT, VarBounds::FREE, VarBounds::NONNEGATIVE];
        lp.add_constraint(vec![(0, 1.0), (1, 1.0), (2, -1.0)], Relation::Le, 2.5);
        lp.add_constraint(vec![(1, 1.0), (2, 1.0)], Relation::Ge, -1.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Eq, 0.5);
        let direct = solve(&lp);
        let via = solve_lp_via_dual(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(direct.status, LpStatus::Optimal);
        assert_eq!(via.status, LpStatus::Optimal);
        assert!((direct.objective_value - via.objective_value).abs() < 1e-12);
        assert!(lp.max_violation(&via.assignment) < 1e-12);
        for (a, b) in direct.duals.iter().zip(&via.duals) {
            assert!((a - b).abs() < 1e-12, "{:?} vs {:?}", direct.duals, via.duals);
        }
    }

    #[test]
    fn pure_bland_pricing_agrees() {
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![5.0, 4.0, 3.0];
        lp.add_constraint(vec![(0, 2.0), (1, 3.0), (2, 1.0)], Relation::Le, 5.0);
        lp.add_constraint(vec![(0, 4.0), (1, 1.0), (2, 2.0)], Relation::Le, 11.0);
        lp.add_constraint(vec![(0, 3.0), (1, 4.0), (2, 2.0)], Relation::Le, 8.0);
        let opts = SolverOptions {
            pricing: Pricing::Bland,
            ..SolverOptions::default()
        };
        let a = solve_lp_with(&lp, &opts).unwrap();
        let b = solve(&lp);
        assert!((a.objective_value - 13.0).abs() < 1e-12);
        assert!((b.objective_value - 13.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add_constraint(vec![(1, 1.0)], Relation::Le, 1.0);
        let opts = SolverOptions {
            max_iterations: Some(1),
            ..SolverOptions::default()
        };
        assert_eq!(solve_lp_with(&lp, &opts).unwrap().status, LpStatus::IterationLimit);
    }

    #[test]
    fn malformed_programs_are_rejected() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(3, 1.0)], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::Validation { field: "constraints", .. })));
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![f64::NAN];
        assert!(matches!(solve_lp(&lp), Err(Error::Validation { field: "objective", .. })));
    }

    #[test]
    fn breakdown_tolerance_trips_on_tiny_pivot() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add_constraint(vec![(0, 1e-13)], Relation::Le, 1.0);
        let opts = SolverOptions {
            pivot_tol: 0.0,
            ..SolverOptions::default()
        };
        assert!(matches!(
            solve_lp_with(&lp, &opts),
            Err(Error::DegeneratePivot { row: 0, col: 0, .. })
        ));
    }

    #[test]
    fn text_dump() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 0.5];
        lp.bounds = vec![VarBounds::UNIT, VarBounds::NONNEGATIVE];
        lp.names = vec!["a".into(), "b".into()];
        lp.add_constraint(vec![(0, 1.0), (1, -2.0)], Relation::Ge, 0.0);
        assert_eq!(
            lp.to_text(),
            "max: 1*a 0.5*b\n1*a -2*b >= 0\n0 <= a <= 1\n0 <= b <= inf\n"
        );
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"num_vars":2,"objective":[1,1],
            "constraints":[{"coeffs":[[0,1],[1,1]],"relation":"<=","rhs":1}],
            "bounds":[{"lower":"zero","upper":"one"},{"lower":"free"}]}"#;
        let lp: LinearProgram = serde_json::from_str(text).unwrap();
        assert_eq!(lp.bounds[1], VarBounds::FREE);
        let back: LinearProgram = serde_json::from_str(&serde_json::to_string(&lp).unwrap()).unwrap();
        assert_eq!(back, lp);
    }
}
