//! Seeded instance suites, worst-case search, and report output.
//!
//! Instance `i` of a suite draws from its own ChaCha stream `(seed, i)`, so the
//! suite can be evaluated in parallel and still come out identical on every run.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{analyze_with_limit, BoundReport, CHECK_TOL};
use crate::distribution::random_distribution;
use crate::error::{Error, Result};
use crate::mechanism::{ProductInstance, DEFAULT_GRID_LIMIT};
use crate::myerson::optimal_price;

/// Relative mass changes tried by the search.
const SEARCH_STEPS: [f64; 4] = [0.10, -0.10, 0.01, -0.01];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub num_instances: usize,
    /// Inclusive range of support sizes, drawn per item.
    pub support_sizes: (usize, usize),
    pub value_range: (f64, f64),
    /// Search only: accepted instances must have `alpha` in this closed window.
    pub alpha_window: Option<(f64, f64)>,
    pub grid_limit: usize,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    /// A slack below `-tolerance` counts as a bound violation.
    pub tolerance: f64,
    pub restarts: usize,
    pub steps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            num_instances: 200,
            support_sizes: (1, 8),
            value_range: (0.0, 10.0),
            alpha_window: None,
            grid_limit: DEFAULT_GRID_LIMIT,
            output_path: None,
            format: OutputFormat::Csv,
            tolerance: CHECK_TOL,
            restarts: 20,
            steps: 200,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support_sizes;
        if lo == 0 || lo > hi {
            return Err(Error::validation(
                "support_sizes",
                format!("[{lo}, {hi}] must satisfy 1 <= lo <= hi"),
            ));
        }
        if hi.saturating_mul(hi) > self.grid_limit {
            return Err(Error::validation(
                "support_sizes",
                format!("{hi}x{hi} grids exceed the grid limit {}", self.grid_limit),
            ));
        }
        let (vlo, vhi) = self.value_range;
        if !(vlo.is_finite() && vhi.is_finite() && vlo >= 0.0 && vhi > vlo) {
            return Err(Error::validation(
                "value_range",
                format!("[{vlo}, {vhi}] must satisfy 0 <= lo < hi"),
            ));
        }
        if let Some((alo, ahi)) = self.alpha_window {
            if !(alo >= 1.0 && ahi >= alo && ahi.is_finite()) {
                return Err(Error::validation(
                    "alpha_window",
                    format!("[{alo}, {ahi}] must satisfy 1 <= lo <= hi"),
                ));
            }
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::validation("tolerance", "must be nonnegative"));
        }
        Ok(())
    }

    fn in_window(&self, alpha: Option<f64>) -> bool {
        match (self.alpha_window, alpha) {
            (None, _) => true,
            (Some((lo, hi)), Some(a)) => (lo..=hi).contains(&a),
            (Some(_), None) => false,
        }
    }
}

/// RNG for stream `index` under `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_instance(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<ProductInstance> {
    let (lo, hi) = cfg.support_sizes;
    let n1 = rng.random_range(lo..=hi);
    let n2 = rng.random_range(lo..=hi);
    let d1 = random_distribution(rng, n1, cfg.value_range)?;
    let d2 = random_distribution(rng, n2, cfg.value_range)?;
    Ok(ProductInstance::new(d1, d2))
}

/// The `index`-th instance of the suite defined by `cfg`.
pub fn suite_instance(cfg: &ExperimentConfig, index: usize) -> Result<ProductInstance> {
    draw_instance(cfg, &mut instance_rng(cfg.seed, index as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceStatus {
    Ok,
    /// `r2 = 0`; only the first inequality applies.
    Degenerate,
    Violation,
    Unsolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: usize,
    pub n1: usize,
    pub n2: usize,
    pub status: InstanceStatus,
    pub report: Option<BoundReport>,
    pub error: Option<String>,
}

impl InstanceRecord {
    fn evaluate(instance_id: usize, inst: &ProductInstance, cfg: &ExperimentConfig) -> Self {
        let (n1, n2) = inst.dims();
        match analyze_with_limit(inst, cfg.grid_limit) {
            Ok(report) => {
                let status = if !report.passes(cfg.tolerance) {
                    InstanceStatus::Violation
                } else if report.degenerate {
                    InstanceStatus::Degenerate
                } else {
                    InstanceStatus::Ok
                };
                InstanceRecord {
                    instance_id,
                    n1,
                    n2,
                    status,
                    report: Some(report),
                    error: None,
                }
            }
            Err(e) => InstanceRecord {
                instance_id,
                n1,
                n2,
                status: InstanceStatus::Unsolved,
                report: None,
                error: Some(e.to_string()),
            },
        }
    }

    pub fn row(&self) -> ReportRow {
        let r = self.report.as_ref();
        ReportRow {
            instance_id: self.instance_id,
            n1: self.n1,
            n2: self.n2,
            r1: r.map(|r| r.r1),
            r2: r.map(|r| r.r2),
            alpha: r.and_then(|r| r.alpha),
            srev: r.map(|r| r.srev),
            rev: r.map(|r| r.rev),
            emin: r.map(|r| r.emin),
            g_alpha: r.and_then(|r| r.g_alpha),
            theorem_slack: r.and_then(|r| r.theorem_slack),
            lemma1_slack: r.map(|r| r.lemma1_slack),
            lemma2_slack: r.and_then(|r| r.lemma2_slack),
            ratio: r.map(BoundReport::ratio),
            status: self.status,
        }
    }
}

/// One line of a suite report. Missing values are empty in CSV and `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance_id: usize,
    pub n1: usize,
    pub n2: usize,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub alpha: Option<f64>,
    pub srev: Option<f64>,
    pub rev: Option<f64>,
    pub emin: Option<f64>,
    pub g_alpha: Option<f64>,
    pub theorem_slack: Option<f64>,
    pub lemma1_slack: Option<f64>,
    pub lemma2_slack: Option<f64>,
    pub ratio: Option<f64>,
    pub status: InstanceStatus,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "instance_id",
    "n1",
    "n2",
    "r1",
    "r2",
    "alpha",
    "srev",
    "rev",
    "emin",
    "g_alpha",
    "theorem_slack",
    "lemma1_slack",
    "lemma2_slack",
    "ratio",
    "status",
];

/// Largest observed `Rev / SRev` among instances whose `alpha` falls in one
/// decile of the observed `alpha` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileStat {
    pub decile: usize,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub count: usize,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub records: Vec<InstanceRecord>,
    pub max_ratio: Option<f64>,
    pub argmax_instance: Option<usize>,
    pub passed: usize,
    pub degenerate: usize,
    pub unsolved: usize,
    /// Ids of instances with a slack below `-tolerance`.
    pub violations: Vec<usize>,
    pub alpha_deciles: Vec<DecileStat>,
}

impl SuiteSummary {
    fn from_records(records: Vec<InstanceRecord>) -> Self {
        let count = |s: InstanceStatus| records.iter().filter(|r| r.status == s).count();
        let violations = records
            .iter()
            .filter(|r| r.status == InstanceStatus::Violation)
            .map(|r| r.instance_id)
            .collect();
        let mut max_ratio: Option<(f64, usize)> = None;
        for rec in &records {
            if let Some(report) = &rec.report {
                let ratio = report.ratio();
                if max_ratio.is_none_or(|(best, _)| ratio > best) {
                    max_ratio = Some((ratio, rec.instance_id));
                }
            }
        }
        let alpha_deciles = alpha_deciles(&records);
        SuiteSummary {
            passed: count(InstanceStatus::Ok) + count(InstanceStatus::Degenerate),
            degenerate: count(InstanceStatus::Degenerate),
            unsolved: count(InstanceStatus::Unsolved),
            max_ratio: max_ratio.map(|m| m.0),
            argmax_instance: max_ratio.map(|m| m.1),
            violations,
            alpha_deciles,
            records,
        }
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        self.records.iter().map(InstanceRecord::row).collect()
    }

    pub fn unsolved_fraction(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.unsolved as f64 / self.records.len() as f64
        }
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        render_rows(&self.rows(), format)
    }
}

fn alpha_deciles(records: &[InstanceRecord]) -> Vec<DecileStat> {
    let mut points: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.report.as_ref())
        .filter_map(|r| r.alpha.map(|a| (a, r.ratio())))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = points.len();
    (0..10)
        .filter_map(|k| {
            let chunk = &points[k * n / 10..(k + 1) * n / 10];
            let first = chunk.first()?;
            Some(DecileStat {
                decile: k + 1,
                alpha_lo: first.0,
                alpha_hi: chunk[chunk.len() - 1].0,
                count: chunk.len(),
                max_ratio: chunk.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect()
}

/// Analyzes `cfg.num_instances` seeded random instances. Solver failures are
/// recorded per instance and never abort the suite.
pub fn run_random_suite(cfg: &ExperimentConfig) -> Result<SuiteSummary> {
    cfg.validate()?;
    let records: Vec<InstanceRecord> = (0..cfg.num_instances)
        .into_par_iter()
        .map(|i| match suite_instance(cfg, i) {
            Ok(inst) => InstanceRecord::evaluate(i, &inst, cfg),
            Err(e) => InstanceRecord {
                instance_id: i,
                n1: 0,
                n2: 0,
                status: InstanceStatus::Unsolved,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(SuiteSummary::from_records(records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchCandidate {
    pub restart: usize,
    pub instance: ProductInstance,
    pub report: BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Highest `Rev / SRev` found over all restarts; not claimed to be optimal.
    pub best: Option<SearchCandidate>,
    /// Best instance of each restart that produced a solvable start.
    pub restart_bests: Vec<SearchCandidate>,
    /// Accepted ratios per restart, starting with the initial instance.
    pub trajectories: Vec<Vec<f64>>,
    /// `(restart, step)` of every evaluated instance with a slack below `-tolerance`.
    pub violations: Vec<(usize, usize)>,
    pub evaluations: usize,
    pub unsolved: usize,
}

impl SearchOutcome {
    pub fn unsolved_fraction(&self) -> f64 {
        if self.evaluations == 0 {
            0.0
        } else {
            self.unsolved as f64 / self.evaluations as f64
        }
    }

    /// CSV or JSON rows for the per-restart bests, `instance_id` being the restart.
    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Csv => {
                let rows: Vec<ReportRow> = self
                    .restart_bests
                    .iter()
                    .map(|c| {
                        let (n1, n2) = c.instance.dims();
                        InstanceRecord {
                            instance_id: c.restart,
                            n1,
                            n2,
                            status: InstanceStatus::Ok,
                            report: Some(c.report.clone()),
                            error: None,
                        }
                        .row()
                    })
                    .collect();
                render_rows(&rows, OutputFormat::Csv)
            }
        }
    }
}

struct RestartResult {
    best: Option<SearchCandidate>,
    trajectory: Vec<f64>,
    violations: Vec<(usize, usize)>,
    evaluations: usize,
    unsolved: usize,
}

/// Starting instance for a restart. With an alpha window, the lower-revenue
/// item's values are rescaled so that `alpha` hits a random target inside the
/// window; such values may leave `value_range`.
fn search_start(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<ProductInstance> {
    let inst = draw_instance(cfg, rng)?;
    let Some((lo, hi)) = cfg.alpha_window else {
        return Ok(inst);
    };
    let target = lo * (hi / lo).powf(rng.random::<f64>());
    let r1 = optimal_price(&inst.d1).revenue;
    let r2 = optimal_price(&inst.d2).revenue;
    if r1 <= 0.0 || r2 <= 0.0 {
        return Err(Error::DegenerateInstance);
    }
    Ok(if r1 >= r2 {
        ProductInstance::new(inst.d1.clone(), inst.d2.scaled(r1 / (target * r2))?)
    } else {
        ProductInstance::new(inst.d1.scaled(r2 / (target * r1))?, inst.d2.clone())
    })
}

fn perturb(inst: &ProductInstance, rng: &mut ChaCha8Rng) -> Result<ProductInstance> {
    let first = rng.random_bool(0.5);
    let d = if first { &inst.d1 } else { &inst.d2 };
    let atom = rng.random_range(0..d.len());
    let step = SEARCH_STEPS[rng.random_range(0..SEARCH_STEPS.len())];
    let mut probs = d.probs().to_vec();
    probs[atom] *= 1.0 + step;
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let moved = d.with_probs(probs)?;
    Ok(if first {
        ProductInstance::new(moved, inst.d2.clone())
    } else {
        ProductInstance::new(inst.d1.clone(), moved)
    })
}

fn run_restart(cfg: &ExperimentConfig, restart: usize) -> RestartResult {
    let mut rng = instance_rng(cfg.seed, restart as u64);
    let mut out = RestartResult {
        best: None,
        trajectory: Vec::new(),
        violations: Vec::new(),
        evaluations: 0,
        unsolved: 0,
    };
    // a few fresh draws in case the start lands outside the window or fails to solve
    let mut current = None;
    for _ in 0..16 {
        let Ok(inst) = search_start(cfg, &mut rng) else {
            continue;
        };
        out.evaluations += 1;
        match analyze_with_limit(&inst, cfg.grid_limit) {
            Ok(report) if cfg.in_window(report.alpha) => {
                if !report.passes(cfg.tolerance) {
                    out.violations.push((restart, 0));
                }
                current = Some((inst, report));
                break;
            }
            Ok(_) => {}
            Err(_) => out.unsolved += 1,
        }
    }
    let Some((mut inst, mut report)) = current else {
        return out;
    };
    out.trajectory.push(report.ratio());

    for step in 1..=cfg.steps {
        let Ok(candidate) = perturb(&inst, &mut rng) else {
            continue;
        };
        out.evaluations += 1;
        let next = match analyze_with_limit(&candidate, cfg.grid_limit) {
            Ok(r) => r,
            Err(_) => {
                out.unsolved += 1;
                continue;
            }
        };
        if !next.passes(cfg.tolerance) {
            out.violations.push((restart, step));
        }
        if next.ratio() > report.ratio() && cfg.in_window(next.alpha) {
            inst = candidate;
            report = next;
            out.trajectory.push(report.ratio());
        }
    }
    out.best = Some(SearchCandidate {
        restart,
        instance: inst,
        report,
    });
    out
}

/// Hill climbing on the probability vectors of fixed supports: each step scales
/// one atom's mass by a factor from `1 +- {10%, 1%}`, renormalizes, re-solves,
/// and keeps the move if `Rev / SRev` rises and `alpha` stays in the window.
pub fn worst_case_search(cfg: &ExperimentConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let results: Vec<RestartResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(cfg, r))
        .collect();
    let mut outcome = SearchOutcome {
        best: None,
        restart_bests: Vec::new(),
        trajectories: Vec::new(),
        violations: Vec::new(),
        evaluations: 0,
        unsolved: 0,
    };
    for res in results {
        outcome.evaluations += res.evaluations;
        outcome.unsolved += res.unsolved;
        outcome.violations.extend(res.violations);
        outcome.trajectories.push(res.trajectory);
        if let Some(candidate) = res.best {
            let better = outcome
                .best
                .as_ref()
                .is_none_or(|b| candidate.report.ratio() > b.report.ratio());
            if better {
                outcome.best = Some(candidate.clone());
            }
            outcome.restart_bests.push(candidate);
        }
    }
    Ok(outcome)
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Output(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Report rows as CSV (header always present) or a JSON array.
pub fn render_rows(rows: &[ReportRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(rows),
        OutputFormat::Csv => {
            let mut writer = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            writer
                .write_record(CSV_COLUMNS)
                .map_err(|e| Error::Output(e.to_string()))?;
            for row in rows {
                writer.serialize(row).map_err(|e| Error::Output(e.to_string()))?;
            }
            let bytes = writer.into_inner().map_err(|e| Error::Output(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Output(e.to_string()))
        }
    }
}

/// Writes `contents` to a sibling temporary file and renames it over `path`.
pub fn write_atomically(path: &Path, contents: &str) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
