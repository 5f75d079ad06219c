//! Experiment driver: Monte Carlo success curves, per-seed crossing
//! bisection under the monotone coupling, exponent fits, and resumable CSV
//! sweeps.
//!
//! All randomness flows from a single master seed. Each (n, trial) pair owns
//! a derived seed shared across the whole p-grid, so the per-seed success
//! indicator is a step function of p and crossing points are well-defined.

use crate::error::{Error, Result};
use crate::factor::{has_factor, FactorResult};
use crate::hosts::HostSpec;
use crate::perturb::{perturb, PerturbationPlan};
use crate::rng::derive_seed;
use crate::spread::{wilson_lower, wilson_upper};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrialOutcome {
    Success,
    Failure,
    Undecided { reason: String },
}

/// One trial: build the host from the trial seed, perturb at `p`, decide.
/// Host construction depends only on the seed (never on `p`), so trials at
/// different `p` under one seed are coupled.
pub fn trial(spec: &HostSpec, p: f64, seed: u64, budget: u64) -> TrialOutcome {
    let Some(r) = spec.r() else {
        return TrialOutcome::Undecided {
            reason: format!("family {} has no factor order", spec.family_name()),
        };
    };
    let host = match spec.build(derive_seed(seed, 1)) {
        Ok(h) => h,
        Err(e) => {
            return TrialOutcome::Undecided {
                reason: format!("host construction failed: {e}"),
            }
        }
    };
    let plan = PerturbationPlan::new(derive_seed(seed, 2));
    let perturbed = match perturb(&host.graph, p, &plan, 0) {
        Ok(g) => g,
        Err(e) => {
            return TrialOutcome::Undecided {
                reason: format!("perturbation failed: {e}"),
            }
        }
    };
    match has_factor(&perturbed, r as usize, budget) {
        Ok(FactorResult::Found(_)) => TrialOutcome::Success,
        Ok(FactorResult::Absent { .. }) => TrialOutcome::Failure,
        Ok(FactorResult::BudgetExhausted { nodes }) => TrialOutcome::Undecided {
            reason: format!("budget exhausted after {nodes} nodes"),
        },
        Err(e) => TrialOutcome::Undecided {
            reason: format!("engine error: {e}"),
        },
    }
}

/// Per-seed crossing points with summary statistics.
#[derive(Clone, Debug, Serialize)]
pub struct CrossingEstimate {
    pub n: usize,
    /// per-seed crossing p*(seed); bisection bracket upper end
    pub crossings: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// seeds discarded (no bracket, or an undecided probe)
    pub discarded: usize,
}

/// Per-seed binary search for the crossing probability, exact thanks to the
/// pointwise coupling: within one seed the success indicator is monotone in
/// p, so a bracket `(lo fails, hi succeeds)` is maintained by construction.
/// Seeds whose endpoints misbehave or that hit the budget are discarded and
/// counted.
pub fn crossing(
    spec: &HostSpec,
    seeds: u64,
    tol: f64,
    budget: u64,
    master_seed: u64,
) -> Result<CrossingEstimate> {
    if !(0.0..1.0).contains(&tol) || tol <= 0.0 {
        return Err(Error::Domain(format!("tolerance must be in (0, 1), got {tol}")));
    }
    let results: Vec<Option<f64>> = (0..seeds)
        .into_par_iter()
        .map(|i| crossing_one_seed(spec, derive_seed(master_seed, i), tol, budget))
        .collect();
    let discarded = results.iter().filter(|r| r.is_none()).count();
    let mut crossings: Vec<f64> = results.into_iter().flatten().collect();
    crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if crossings.is_empty() {
        return Err(Error::ConstructionFailure {
            retries: seeds as usize,
            msg: "every seed was discarded".into(),
        });
    }
    let q = |f: f64| -> f64 {
        let idx = (f * (crossings.len() - 1) as f64).round() as usize;
        crossings[idx]
    };
    Ok(CrossingEstimate {
        n: spec.n(),
        median: q(0.5),
        q1: q(0.25),
        q3: q(0.75),
        crossings,
        discarded,
    })
}

fn crossing_one_seed(spec: &HostSpec, seed: u64, tol: f64, budget: u64) -> Option<f64> {
    // endpoints: failure at p = 0, success at p = 1
    match trial(spec, 0.0, seed, budget) {
        TrialOutcome::Failure => {}
        _ => return None,
    }
    match trial(spec, 1.0, seed, budget) {
        TrialOutcome::Success => {}
        _ => return None,
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while (hi - lo) / hi > tol {
        let mid = 0.5 * (lo + hi);
        match trial(spec, mid, seed, budget) {
            TrialOutcome::Success => hi = mid,
            TrialOutcome::Failure => lo = mid,
            TrialOutcome::Undecided { .. } => return None,
        }
    }
    Some(hi)
}

/// Least-squares slope of `ln p*` against `ln n`, with its standard error.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Argument(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, p)| p.ln()).collect();
    let mut sorted = xs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Argument("n values must be distinct".into()));
    }
    let k = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / k;
    let ybar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let se = (ss_res / (k - 2.0) / sxx).sqrt();
    Ok((slope, se))
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Configuration of a sweep, loadable from JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: HostSpec,
    /// vertex counts; each overrides the family's own n
    pub n_list: Vec<usize>,
    pub p_grid: Vec<f64>,
    pub trials: u32,
    pub master_seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub workers: usize,
}

fn default_budget() -> u64 {
    crate::factor::DEFAULT_BUDGET
}

impl HostSpec {
    /// The same family with the vertex count replaced.
    pub fn with_n(&self, n: usize) -> HostSpec {
        let mut spec = self.clone();
        match &mut spec {
            HostSpec::FGamma { n: m, .. }
            | HostSpec::MultipartiteS2 { n: m, .. }
            | HostSpec::PseudorandomLower { n: m, .. }
            | HostSpec::HsTight { n: m, .. } => *m = n,
            _ => {}
        }
        spec
    }
}

/// One row of the sweep CSV.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRecord {
    pub family: String,
    pub n: usize,
    pub p: f64,
    pub trials: u32,
    pub successes: u32,
    pub budget_exhausted: u32,
    pub phat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

pub const SWEEP_HEADER: &str =
    "family,n,p,trials,successes,budget_exhausted,phat,wilson_lo,wilson_hi";

impl SweepRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.6}",
            self.family,
            self.n,
            self.p,
            self.trials,
            self.successes,
            self.budget_exhausted,
            self.phat,
            self.wilson_lo,
            self.wilson_hi
        )
    }
}

/// Runs the grid, skipping cells already present in the output file, and
/// rewrites the file with all rows sorted by (n, p). Existing rows are kept
/// verbatim, so a completed sweep reruns to a byte-identical file.
pub fn sweep(config: &SweepConfig, out: &Path) -> Result<Vec<SweepRecord>> {
    if config.trials < 1 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    // existing rows, kept as raw lines keyed by (n, p-string)
    let mut existing: Vec<(usize, f64, String)> = Vec::new();
    if out.exists() {
        let text = std::fs::read_to_string(out)?;
        for line in text.lines().skip(1) {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let _family = parts.next();
            let n: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InputFormat {
                    line: 0,
                    msg: "bad n in existing sweep output".into(),
                })?;
            let p: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InputFormat {
                    line: 0,
                    msg: "bad p in existing sweep output".into(),
                })?;
            existing.push((n, p, line.to_string()));
        }
    }
    let have = |n: usize, p: f64| existing.iter().any(|&(en, ep, _)| en == n && ep == p);
    // cells to compute
    let mut todo: Vec<(usize, f64)> = Vec::new();
    for &n in &config.n_list {
        for &p in &config.p_grid {
            if !have(n, p) {
                todo.push((n, p));
            }
        }
    }
    let mut fresh: Vec<SweepRecord> = Vec::new();
    if !todo.is_empty() {
        let run = |cells: &[(usize, f64)]| -> Result<Vec<SweepRecord>> {
            cells
                .par_iter()
                .map(|&(n, p)| sweep_cell(config, n, p))
                .collect()
        };
        fresh = if config.workers > 0 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            pool.install(|| run(&todo))?
        } else {
            run(&todo)?
        };
        monotonicity_check(config, &fresh)?;
    }
    // merge and write sorted by (n, p), existing lines verbatim
    let mut lines: Vec<(usize, f64, String)> = existing;
    for rec in &fresh {
        lines.push((rec.n, rec.p, rec.to_csv_line()));
    }
    lines.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap()));
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for (_, _, line) in &lines {
        text.push_str(line);
        text.push('\n');
    }
    let changed = !out.exists() || std::fs::read_to_string(out)? != text;
    if changed {
        std::fs::write(out, &text)?;
    }
    Ok(fresh)
}

fn sweep_cell(config: &SweepConfig, n: usize, p: f64) -> Result<SweepRecord> {
    let spec = config.family.with_n(n);
    let mut successes = 0u32;
    let mut undecided = 0u32;
    for t in 0..config.trials {
        let seed = trial_seed(config.master_seed, n, t);
        match trial(&spec, p, seed, config.budget) {
            TrialOutcome::Success => successes += 1,
            TrialOutcome::Failure => {}
            TrialOutcome::Undecided { .. } => undecided += 1,
        }
    }
    let decided = (config.trials - undecided) as u64;
    let phat = if decided > 0 {
        successes as f64 / decided as f64
    } else {
        f64::NAN
    };
    Ok(SweepRecord {
        family: spec.family_name().to_string(),
        n,
        p,
        trials: config.trials,
        successes,
        budget_exhausted: undecided,
        phat,
        wilson_lo: wilson_lower(successes as u64, decided, 1.96),
        wilson_hi: wilson_upper(successes as u64, decided, 1.96),
    })
}

fn trial_seed(master: u64, n: usize, t: u32) -> u64 {
    derive_seed(derive_seed(master, n as u64), t as u64)
}

/// Within each seed the success indicator across the p-grid must be a step
/// function (failures then successes); a violation is a coupling bug.
fn monotonicity_check(config: &SweepConfig, _fresh: &[SweepRecord]) -> Result<()> {
    let mut ps = config.p_grid.clone();
    ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if ps.len() < 2 {
        return Ok(());
    }
    for &n in &config.n_list {
        let spec = config.family.with_n(n);
        for t in 0..config.trials {
            let seed = trial_seed(config.master_seed, n, t);
            let mut seen_success = false;
            for &p in &ps {
                match trial(&spec, p, seed, config.budget) {
                    TrialOutcome::Success => seen_success = true,
                    TrialOutcome::Failure => {
                        if seen_success {
                            return Err(Error::Internal(format!(
                                "monotonicity violated at n={n} trial={t} p={p}"
                            )));
                        }
                    }
                    TrialOutcome::Undecided { .. } => {}
                }
            }
        }
    }
    Ok(())
}
