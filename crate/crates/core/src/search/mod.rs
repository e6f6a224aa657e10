//! Constrained maximization of the final Charlie's value, the maximum number
//! of simultaneously violating Charlies, the double-violation window and
//! sharpness grid sweeps.
//!
//! `optimize` runs staged multistart searches. The reference-settings stage
//! (only λ free) always runs first; with free angles its optimum seeds a
//! stage where every Charlie shares one setting pair, and that optimum in
//! turn seeds the fully free stage. A later stage can therefore never
//! report less than an earlier one.
//!
//! Reference settings are the ones maximizing a single sharp Charlie's
//! value: the closed-form equatorial settings on GHZ, a search result on
//! any other state.

pub mod objective;
mod simplex;

pub use objective::{Layout, MIN_LAMBDA, PENALTY_WEIGHT};
pub use simplex::{coordinate_polish, golden_section, nelder_mead, reflect, Budgeted, LocalOptimum, SimplexOptions};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{
    evaluate, InequalityKind, InequalityReport, InitialState, PartySettings, ScenarioConfig,
    StateKind, MAX_CHARLIES,
};
use crate::rng;
use objective::Problem;

pub const DEFAULT_BUDGET: usize = 200_000;
pub const DEFAULT_RESTARTS: usize = 64;
pub const DEFAULT_MARGIN: f64 = 1e-3;
/// Slack allowed when re-checking thresholds on a re-evaluated optimum.
pub const THRESHOLD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleMode {
    FreeAngles,
    PaperAnglesFixed,
}

#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub kind: InequalityKind,
    pub state: InitialState,
    pub charlies: usize,
    /// Minimum values for Charlies 1..n−1.
    pub thresholds: Vec<f64>,
    pub angle_mode: AngleMode,
    /// Maximum objective evaluations over all stages and restarts.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl SearchSpec {
    /// Free-angle spec with default budget, restarts and seed 0.
    pub fn new(kind: InequalityKind, state: InitialState, thresholds: Vec<f64>) -> Self {
        Self {
            kind,
            state,
            charlies: thresholds.len() + 1,
            thresholds,
            angle_mode: AngleMode::FreeAngles,
            budget: DEFAULT_BUDGET,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.charlies == 0 || self.charlies > MAX_CHARLIES {
            return Err(Error::InvalidSearch(format!(
                "charlies must be in 1..={MAX_CHARLIES}, got {}",
                self.charlies
            )));
        }
        if self.thresholds.len() + 1 != self.charlies {
            return Err(Error::InvalidSearch(format!(
                "{} charlies need {} thresholds, got {}",
                self.charlies,
                self.charlies - 1,
                self.thresholds.len()
            )));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidSearch(format!("threshold {t} is not finite")));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidSearch("restarts must be positive".into()));
        }
        if self.budget < 2 * self.restarts {
            return Err(Error::InvalidSearch(format!(
                "budget {} is too small for {} restarts",
                self.budget, self.restarts
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Final Charlie's value, re-evaluated from `best_config`.
    pub best_value: f64,
    pub best_config: ScenarioConfig,
    pub feasible: bool,
    pub evaluations_used: usize,
    /// V_1..V_n at the optimum.
    pub per_charlie: Vec<f64>,
    /// Penalized objective at the optimum (equals `best_value` when every
    /// threshold is reachable).
    pub objective: f64,
    pub report: InequalityReport,
}

struct StageOutcome {
    best: LocalOptimum,
    used: usize,
}

fn run_stage(problem: &Problem, seeds: &[Vec<f64>], restarts: usize, budget: usize, seed: u64, label: &str) -> StageOutcome {
    let bounds = problem.bounds();
    let dim = bounds.len();
    if dim == 0 {
        let value = problem.evaluate(&[]).objective;
        return StageOutcome {
            best: LocalOptimum { x: Vec::new(), value },
            used: 1,
        };
    }
    let polish_budget = budget / 10;
    let per_restart = ((budget - polish_budget) / restarts).max(dim + 2);
    let widths: Vec<f64> = bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let opts = SimplexOptions {
        initial_step: widths.iter().map(|w| 0.15 * w).collect(),
        f_tol: 1e-13,
        x_tol: 1e-10,
        rebuilds: 4,
    };

    let locals: Vec<(LocalOptimum, usize)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = match seeds.get(r) {
                Some(s) => s.clone(),
                None => {
                    let mut g = rng::stream(seed, label, r as u64);
                    bounds.iter().map(|&(lo, hi)| g.random_range(lo..=hi)).collect()
                }
            };
            let mut f = |x: &[f64]| problem.evaluate(x).objective;
            let mut obj = Budgeted::new(&mut f, &bounds, per_restart);
            let found = nelder_mead(&mut obj, &start, &opts);
            (found, obj.used())
        })
        .collect();

    let mut used: usize = locals.iter().map(|(_, u)| u).sum();
    // ties go to the lower restart index
    let mut best = locals[0].0.clone();
    for (cand, _) in &locals[1..] {
        if cand.value > best.value {
            best = cand.clone();
        }
    }
    let remaining = budget.saturating_sub(used);
    if remaining > 0 {
        let mut f = |x: &[f64]| problem.evaluate(x).objective;
        let mut obj = Budgeted::new(&mut f, &bounds, remaining);
        let radius: Vec<f64> = widths.iter().map(|w| 0.02 * w).collect();
        best = coordinate_polish(&mut obj, best, &radius, 1e-10);
        used += obj.used();
    }
    StageOutcome { best, used }
}

/// Alice, Bob and Charlie settings of a single sharp Charlie's optimum, with
/// the evaluations spent finding them.
pub fn reference_settings(
    kind: InequalityKind,
    state: &InitialState,
    restarts: usize,
    budget: usize,
    seed: u64,
) -> ((PartySettings, PartySettings, PartySettings), usize) {
    if state.kind() == StateKind::Ghz {
        return (kind.reference_settings(), 0);
    }
    let single = Problem {
        kind,
        state: state.clone(),
        thresholds: Vec::new(),
        layout: Layout::Free,
        reference: kind.reference_settings(),
    };
    // a smooth 12-dimensional problem: fewer, longer runs converge better
    let stage = run_stage(&single, &[], restarts.div_ceil(4), budget, seed, rng::SEARCH_REFERENCE);
    let (a, b, c, _) = single.decode(&stage.best.x);
    ((a, b, c[0]), stage.used)
}

/// Budget shares: reference settings (non-GHZ only), λ at reference
/// settings, shared Charlie settings, fully free.
const STAGE_SHARES: [f64; 4] = [0.15, 0.05, 0.35, 0.45];

pub fn optimize(spec: &SearchSpec) -> Result<SearchResult> {
    spec.validate()?;
    let share = |k: usize| ((spec.budget as f64 * STAGE_SHARES[k]) as usize).max(2 * spec.restarts);
    let (reference, mut used) = reference_settings(spec.kind, &spec.state, spec.restarts, share(0), spec.seed);
    let problem_for = |layout| Problem {
        kind: spec.kind,
        state: spec.state.clone(),
        thresholds: spec.thresholds.clone(),
        layout,
        reference,
    };

    let fixed = problem_for(Layout::Fixed);
    let fixed_budget = match spec.angle_mode {
        AngleMode::PaperAnglesFixed => spec.budget.saturating_sub(used).max(2 * spec.restarts),
        AngleMode::FreeAngles => share(1),
    };
    let stage = run_stage(&fixed, &[], spec.restarts, fixed_budget, spec.seed, rng::SEARCH_FIXED);
    used += stage.used;
    let (mut problem, mut best) = (fixed, stage.best);

    if spec.angle_mode == AngleMode::FreeAngles {
        for (k, (layout, label)) in [(Layout::Tied, rng::SEARCH_TIED), (Layout::Free, rng::SEARCH_FREE)].into_iter().enumerate() {
            let next = problem_for(layout);
            let (a, b, c, raw) = problem.decode(&best.x);
            let seed_point = next.encode(&a, &b, &c, &raw);
            let stage = run_stage(&next, &[seed_point.clone()], spec.restarts, share(k + 2), spec.seed, label);
            used += stage.used;
            // the carried-over point is a candidate in its own right
            let carried = LocalOptimum {
                value: next.evaluate(&seed_point).objective,
                x: seed_point,
            };
            best = if stage.best.value > carried.value { stage.best } else { carried };
            problem = next;
        }
    }

    let best_config = problem.config(&best.x);
    let report = evaluate(&best_config);
    let per_charlie = report.values(spec.kind);
    let best_value = *per_charlie.last().expect("at least one charlie");
    let thresholds_met = spec
        .thresholds
        .iter()
        .zip(&per_charlie)
        .all(|(t, v)| *v >= t - THRESHOLD_TOL);
    Ok(SearchResult {
        best_value,
        feasible: thresholds_met && best_value > spec.kind.classical_bound(),
        best_config,
        evaluations_used: used,
        per_charlie,
        objective: best.value,
        report,
    })
}

/// Search settings shared by every n tried in [`max_observers`].
#[derive(Debug, Clone, Copy)]
pub struct ObserverSearch {
    pub margin: f64,
    pub angle_mode: AngleMode,
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
}

/// Angles default to the reference settings: with free angles a chain of
/// Charlies repeating one measurement direction keeps a Mermin violation
/// indefinitely, so the count is only meaningful with settings held fixed.
impl Default for ObserverSearch {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            angle_mode: AngleMode::PaperAnglesFixed,
            budget: DEFAULT_BUDGET,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObserverCount {
    pub count: usize,
    /// One result per n tried, starting at n = 1; the last is the first
    /// failure unless the chain limit was reached.
    pub attempts: Vec<SearchResult>,
}

/// Largest n for which every one of n Charlies exceeds the classical bound
/// by `margin`. Ascends from n = 1 and stops at the first failure.
pub fn max_observers(kind: InequalityKind, state: &InitialState, opts: &ObserverSearch) -> Result<ObserverCount> {
    if !(opts.margin >= 0.0) {
        return Err(Error::InvalidSearch(format!("margin must be non-negative, got {}", opts.margin)));
    }
    let target = kind.classical_bound() + opts.margin;
    let mut attempts = Vec::new();
    let mut count = 0;
    for n in 1..=MAX_CHARLIES {
        let spec = SearchSpec {
            kind,
            state: state.clone(),
            charlies: n,
            thresholds: vec![target; n - 1],
            angle_mode: opts.angle_mode,
            budget: opts.budget,
            restarts: opts.restarts,
            seed: opts.seed,
        };
        let result = optimize(&spec)?;
        let ok = result.feasible && result.best_value >= target;
        attempts.push(result);
        if !ok {
            break;
        }
        count = n;
    }
    Ok(ObserverCount { count, attempts })
}

/// λ_1 range, at the reference settings with two Charlies, over which both
/// exceed the classical bound: the lower end is where V_1 reaches it, the
/// upper end where V_2 falls back to it.
pub fn sharpness_window(kind: InequalityKind, state: &InitialState) -> Result<(f64, f64)> {
    let bound = kind.classical_bound();
    let values = |lambda: f64| -> Result<Vec<f64>> {
        let config = ScenarioConfig::reference(kind, state.clone(), &[lambda])?;
        Ok(evaluate(&config).values(kind))
    };
    let first = |l: f64| values(l).map(|v| v[0] - bound);
    let second = |l: f64| values(l).map(|v| v[1] - bound);

    if first(1.0)? <= 0.0 {
        return Err(Error::NoWindow(format!("first charlie never exceeds {bound}")));
    }
    let low = bisect(first, MIN_LAMBDA, 1.0)?;
    if second(low)? <= 0.0 {
        return Err(Error::NoWindow(format!(
            "second charlie is already at or below {bound} when the first reaches it"
        )));
    }
    let high = if second(1.0)? >= 0.0 { 1.0 } else { bisect(second, low, 1.0)? };
    Ok((low, high))
}

/// Sign change of `f` on `[a, b]`, to well below 1e−4.
fn bisect(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let fa_negative = f(a)? < 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if (f(mid)? < 0.0) == fa_negative {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    /// Position in the Cartesian product (last grid varies fastest).
    pub index: usize,
    pub lambdas: Vec<f64>,
    pub report: InequalityReport,
}

/// Evaluates `template` at every point of the Cartesian product of `grids`.
/// One grid per Charlie, or one per unsharp Charlie (the final λ is then
/// taken from the template).
pub fn sweep(template: &ScenarioConfig, grids: &[Vec<f64>], budget: usize) -> Result<Vec<SweepRow>> {
    let n = template.charlie_count();
    if grids.len() != n && grids.len() + 1 != n {
        return Err(Error::InvalidSearch(format!(
            "{} grids given for {n} charlies",
            grids.len()
        )));
    }
    if let Some(k) = grids.iter().position(|g| g.is_empty()) {
        return Err(Error::InvalidSearch(format!("grid for charlie {} is empty", k + 1)));
    }
    let required = grids.iter().try_fold(1usize, |acc, g| acc.checked_mul(g.len())).unwrap_or(usize::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let base = template.sharpness_schedule();
    (0..required)
        .into_par_iter()
        .map(|index| {
            let mut lambdas = base.clone();
            let mut rest = index;
            for (k, g) in grids.iter().enumerate().rev() {
                lambdas[k] = g[rest % g.len()];
                rest /= g.len();
            }
            let config = template.with_schedule(&lambdas)?;
            Ok(SweepRow {
                index,
                lambdas,
                report: evaluate(&config),
            })
        })
        .collect()
}

/// `start, start + step, …` up to `stop` (inclusive, with rounding slack).
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidSearch(format!("bad grid {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}
