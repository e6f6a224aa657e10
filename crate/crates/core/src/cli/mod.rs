//! Command-line front end: `evaluate`, `optimize`, `sweep`, `reproduce` and
//! `oracle-check`.
//!
//! Exit codes: 0 success, 1 a reproduction item or property check failed,
//! 2 invalid input.

pub mod config;
pub mod output;
pub mod reproduce;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::protocol::properties::{
    no_signalling_deviation, normalization_deviation, oracle_deviation, random_config,
    temporal_signalling_shift,
};
use crate::protocol::{evaluate, InequalityKind, InitialState, ScenarioConfig};
use crate::rng;
use crate::search::{
    self, max_observers, optimize, AngleMode, ObserverSearch, SearchSpec, DEFAULT_BUDGET, DEFAULT_MARGIN,
    DEFAULT_RESTARTS,
};
use config::{parse_scenario, render_scenario, ScenarioFile};
use output::{csv_string, num, json_string, report_json, report_records, summary_lines, REPORT_COLUMNS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Tolerance for every oracle-check suite.
pub const PROPERTY_TOL: f64 = 1e-12;
/// Smallest distribution shift accepted as a temporal signalling witness.
pub const SIGNALLING_WITNESS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "trishare", version, about = "Sequential sharing of tripartite nonlocality under unsharp measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Result file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Objective evaluations per search (sweep: maximum grid points).
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    #[arg(long, global = true, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    /// Hold angles at the single-Charlie optimum; only sharpness is searched.
    #[arg(long, global = true)]
    pub fix_paper_angles: bool,
    /// Accept an unsharp final Charlie.
    #[arg(long, global = true)]
    pub allow_unsharp_final: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-Charlie inequality values and correlators of a scenario file.
    Evaluate,
    /// Maximize the final Charlie's value under thresholds on the earlier ones.
    Optimize {
        #[arg(long, value_enum, default_value_t = KindArg::Mermin)]
        kind: KindArg,
        /// Initial state; a --config file's state takes precedence.
        #[arg(long, value_enum, default_value_t = StateArg::Ghz)]
        state: StateArg,
        /// Chain length; defaults to one more than the number of thresholds.
        #[arg(long)]
        charlies: Option<usize>,
        /// Minimum value for Charlies 1..n−1; a single value applies to all.
        #[arg(long = "threshold")]
        thresholds: Vec<f64>,
        /// Report the largest number of simultaneously violating Charlies instead.
        #[arg(long)]
        max_observers: bool,
        /// Required excess over the classical bound for --max-observers.
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        /// With --max-observers: search all angles instead of holding them fixed.
        #[arg(long, requires = "max_observers")]
        free_angles: bool,
    },
    /// Evaluate a scenario over a grid of sharpness values.
    Sweep {
        /// START:STOP:STEP, one per Charlie (or per unsharp Charlie), in order.
        #[arg(long = "grid", required = true)]
        grids: Vec<String>,
    },
    /// Recompute every reference value and compare.
    Reproduce,
    /// Randomized oracle-equivalence, normalization and no-signalling checks.
    OracleCheck {
        #[arg(long, default_value_t = 50)]
        draws: usize,
        #[arg(long, default_value_t = 3)]
        max_charlies: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Mermin,
    Svetlichny,
}

impl From<KindArg> for InequalityKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Mermin => InequalityKind::Mermin,
            KindArg::Svetlichny => InequalityKind::Svetlichny,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateArg {
    Ghz,
    W,
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.to_string(),
        }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::invalid(e)
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load(cli: &Cli) -> Result<Option<ScenarioFile>, Failure> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    parse_scenario(&text, cli.allow_unsharp_final)
        .map(Some)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn require(cli: &Cli) -> Result<ScenarioFile, Failure> {
    load(cli)?.ok_or_else(|| Failure::invalid("--config is required for this command"))
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure {
            code: EXIT_FAILURE,
            message: format!("{}: {e}", path.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn scenario_id(file: &ScenarioFile, fallback: &str) -> String {
    file.id.clone().unwrap_or_else(|| fallback.to_string())
}

pub fn execute(cli: &Cli) -> Result<i32, Failure> {
    match &cli.command {
        Command::Evaluate => run_evaluate(cli),
        Command::Optimize {
            kind,
            state,
            charlies,
            thresholds,
            max_observers,
            margin,
            free_angles,
        } => {
            if *max_observers {
                run_max_observers(cli, (*kind).into(), *state, *margin, *free_angles)
            } else {
                run_optimize(cli, (*kind).into(), *state, *charlies, thresholds)
            }
        }
        Command::Sweep { grids } => run_sweep(cli, grids),
        Command::Reproduce => run_reproduce(cli),
        Command::OracleCheck { draws, max_charlies } => run_oracle_check(cli, *draws, *max_charlies),
    }
}

fn run_evaluate(cli: &Cli) -> Result<i32, Failure> {
    let file = require(cli)?;
    let id = scenario_id(&file, "scenario");
    let report = evaluate(&file.scenario);
    for line in summary_lines(&report) {
        eprintln!("{line}");
    }
    let text = match cli.format {
        Format::Json => json_string(&report_json(&id, &report)),
        Format::Csv => csv_string(&REPORT_COLUMNS, &report_records(&id, &report)),
    };
    emit(cli, &text)?;
    Ok(EXIT_OK)
}

fn initial_state(cli: &Cli, state: StateArg) -> Result<InitialState, Failure> {
    if let Some(file) = load(cli)? {
        return Ok(file.scenario.state().clone());
    }
    Ok(match state {
        StateArg::Ghz => InitialState::ghz(),
        StateArg::W => InitialState::w(),
    })
}

fn angle_mode(cli: &Cli) -> AngleMode {
    if cli.fix_paper_angles {
        AngleMode::PaperAnglesFixed
    } else {
        AngleMode::FreeAngles
    }
}

fn run_optimize(cli: &Cli, kind: InequalityKind, state: StateArg, charlies: Option<usize>, thresholds: &[f64]) -> Result<i32, Failure> {
    let n = charlies.unwrap_or(thresholds.len() + 1);
    if n == 0 {
        return Err(Failure::invalid("--charlies must be at least 1"));
    }
    let thresholds = match thresholds.len() {
        _ if n == 1 && thresholds.is_empty() => Vec::new(),
        0 => vec![kind.classical_bound() + DEFAULT_MARGIN; n - 1],
        1 => vec![thresholds[0]; n - 1],
        k if k == n - 1 => thresholds.to_vec(),
        k => return Err(Failure::invalid(format!("--threshold: {n} charlies need 1 or {} values, got {k}", n - 1))),
    };
    let spec = SearchSpec {
        kind,
        state: initial_state(cli, state)?,
        charlies: n,
        thresholds,
        angle_mode: angle_mode(cli),
        budget: cli.budget.unwrap_or(DEFAULT_BUDGET),
        restarts: cli.restarts,
        seed: cli.seed,
    };
    let r = optimize(&spec)?;
    for line in summary_lines(&r.report) {
        eprintln!("{line}");
    }
    eprintln!("best={:.6}, feasible={}, evaluations={}", r.best_value, r.feasible, r.evaluations_used);
    let id = format!("optimize-{kind}-{}-n{n}", spec.state.kind());
    let text = match cli.format {
        Format::Json => json_string(&json!({
            "kind": kind.to_string(),
            "state": spec.state.kind().to_string(),
            "charlies": n,
            "thresholds": spec.thresholds,
            "angle_mode": spec.angle_mode,
            "seed": spec.seed,
            "budget": spec.budget,
            "restarts": spec.restarts,
            "best_value": r.best_value,
            "feasible": r.feasible,
            "evaluations_used": r.evaluations_used,
            "objective": r.objective,
            "per_charlie": r.per_charlie,
            "schedule": r.best_config.sharpness_schedule(),
            "report": report_json(&id, &r.report),
            "config": render_scenario(Some(&id), &r.best_config),
        })),
        Format::Csv => csv_string(&REPORT_COLUMNS, &report_records(&id, &r.report)),
    };
    emit(cli, &text)?;
    Ok(EXIT_OK)
}

fn run_max_observers(cli: &Cli, kind: InequalityKind, state: StateArg, margin: f64, free: bool) -> Result<i32, Failure> {
    let state = initial_state(cli, state)?;
    // counts default to fixed angles; see `ObserverSearch`
    let mode = if free { AngleMode::FreeAngles } else { ObserverSearch::default().angle_mode };
    let opts = ObserverSearch {
        margin,
        angle_mode: mode,
        budget: cli.budget.unwrap_or(DEFAULT_BUDGET),
        restarts: cli.restarts,
        seed: cli.seed,
    };
    let found = max_observers(kind, &state, &opts)?;
    eprintln!("{kind} on {}: {} charlies", state.kind(), found.count);
    let attempts: Vec<_> = found
        .attempts
        .iter()
        .map(|r| {
            json!({
                "charlies": r.per_charlie.len(),
                "feasible": r.feasible,
                "best_value": r.best_value,
                "per_charlie": r.per_charlie,
                "schedule": r.best_config.sharpness_schedule(),
            })
        })
        .collect();
    let text = match cli.format {
        Format::Json => json_string(&json!({
            "kind": kind.to_string(),
            "state": state.kind().to_string(),
            "margin": margin,
            "angle_mode": mode,
            "count": found.count,
            "attempts": attempts,
        })),
        Format::Csv => {
            let rows: Vec<Vec<String>> = found
                .attempts
                .iter()
                .map(|r| {
                    vec![
                        r.per_charlie.len().to_string(),
                        r.feasible.to_string(),
                        num(r.best_value),
                        found.count.to_string(),
                    ]
                })
                .collect();
            csv_string(&["charlies", "feasible", "best_value", "count"], &rows)
        }
    };
    emit(cli, &text)?;
    Ok(EXIT_OK)
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Failure::invalid(format!("--grid: expected START:STOP:STEP, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    search::grid(nums[0], nums[1], nums[2]).map_err(|e| Failure::invalid(format!("--grid: {e}")))
}

fn run_sweep(cli: &Cli, grids: &[String]) -> Result<i32, Failure> {
    let file = require(cli)?;
    let id = scenario_id(&file, "sweep");
    let grids = grids.iter().map(|g| parse_grid(g)).collect::<Result<Vec<_>, _>>()?;
    let rows = search::sweep(&file.scenario, &grids, cli.budget.unwrap_or(DEFAULT_BUDGET))?;
    eprintln!("{} grid points", rows.len());
    let text = match cli.format {
        Format::Json => json_string(&json!({
            "scenario_id": id,
            "rows": rows
                .iter()
                .map(|r| report_json(&format!("{id}#{}", r.index), &r.report))
                .collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let records: Vec<Vec<String>> = rows
                .iter()
                .flat_map(|r| report_records(&format!("{id}#{}", r.index), &r.report))
                .collect();
            csv_string(&REPORT_COLUMNS, &records)
        }
    };
    emit(cli, &text)?;
    Ok(EXIT_OK)
}

fn run_reproduce(cli: &Cli) -> Result<i32, Failure> {
    let opts = reproduce::BatteryOptions {
        budget: cli.budget.unwrap_or(DEFAULT_BUDGET),
        restarts: cli.restarts,
        seed: cli.seed,
    };
    let items = reproduce::battery(&opts)?;
    let failed = items.iter().filter(|i| i.passed() == Some(false)).count();
    for item in &items {
        eprintln!(
            "{:<5} {:<36} expected {:<10} computed {:.6}",
            item.status(),
            item.id,
            item.expected,
            item.computed
        );
    }
    eprintln!("{} items, {failed} failed", items.len());
    let text = match cli.format {
        Format::Json => json_string(&json!({
            "passed": failed == 0,
            "items": items
                .iter()
                .map(|i| json!({
                    "id": i.id,
                    "expected": i.expected,
                    "computed": i.computed,
                    "abs_deviation": i.deviation(),
                    "tolerance": i.tolerance(),
                    "status": i.status(),
                    "note": i.note,
                }))
                .collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let rows: Vec<Vec<String>> = items
                .iter()
                .map(|i| {
                    vec![
                        i.id.clone(),
                        num(i.expected),
                        num(i.computed),
                        num(i.deviation()),
                        i.tolerance().map(num).unwrap_or_default(),
                        i.status().to_string(),
                        i.note.clone(),
                    ]
                })
                .collect();
            csv_string(&["item", "expected", "computed", "abs_deviation", "tolerance", "status", "note"], &rows)
        }
    };
    emit(cli, &text)?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}

struct Suite {
    name: &'static str,
    worst: f64,
    offender: Option<(usize, ScenarioConfig)>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: 0.0,
            offender: None,
        }
    }

    fn record(&mut self, draw: usize, config: &ScenarioConfig, deviation: f64) {
        if deviation > self.worst || deviation.is_nan() {
            self.worst = deviation;
            if !(deviation <= PROPERTY_TOL) {
                self.offender = Some((draw, config.clone()));
            }
        }
    }

    fn passed(&self) -> bool {
        self.worst <= PROPERTY_TOL
    }
}

fn run_oracle_check(cli: &Cli, draws: usize, max_charlies: usize) -> Result<i32, Failure> {
    if max_charlies == 0 || max_charlies > crate::protocol::ORACLE_MAX_CHARLIES {
        return Err(Failure::invalid(format!(
            "--max-charlies must be in 1..={}",
            crate::protocol::ORACLE_MAX_CHARLIES
        )));
    }
    let mut suites = [Suite::new("oracle_equivalence"), Suite::new("normalization"), Suite::new("no_signalling")];
    for draw in 0..draws {
        let mut g = rng::stream(cli.seed, rng::ORACLE_DRAW, draw as u64);
        let config = random_config(&mut g, max_charlies);
        suites[0].record(draw, &config, oracle_deviation(&config)?);
        suites[1].record(draw, &config, normalization_deviation(&config)?);
        suites[2].record(draw, &config, no_signalling_deviation(&config)?);
    }
    let witness_config = ScenarioConfig::reference(InequalityKind::Svetlichny, InitialState::ghz(), &[1.0])?;
    let shift = temporal_signalling_shift(&witness_config, 2)?;
    let witness_ok = shift > SIGNALLING_WITNESS;

    for s in &suites {
        eprintln!("{:<20} max deviation {:.3e} ({})", s.name, s.worst, if s.passed() { "pass" } else { "fail" });
        if let Some((draw, config)) = &s.offender {
            eprintln!("offending draw {draw}:\n{}", render_scenario(Some(&format!("draw-{draw}")), config));
        }
    }
    eprintln!(
        "temporal_signalling  max shift {shift:.4} ({})",
        if witness_ok { "pass" } else { "fail" }
    );
    let all_ok = suites.iter().all(Suite::passed) && witness_ok;
    let text = match cli.format {
        Format::Json => json_string(&json!({
            "seed": cli.seed,
            "draws": draws,
            "max_charlies": max_charlies,
            "passed": all_ok,
            "suites": suites
                .iter()
                .map(|s| json!({
                    "name": s.name,
                    "max_deviation": s.worst,
                    "tolerance": PROPERTY_TOL,
                    "passed": s.passed(),
                    "offending_draw": s.offender.as_ref().map(|(d, _)| *d),
                }))
                .collect::<Vec<_>>(),
            "temporal_signalling": {
                "max_shift": shift,
                "threshold": SIGNALLING_WITNESS,
                "passed": witness_ok,
                "config": render_scenario(Some("temporal-witness"), &witness_config),
            },
        })),
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = suites
                .iter()
                .map(|s| {
                    vec![
                        s.name.to_string(),
                        num(s.worst),
                        num(PROPERTY_TOL),
                        if s.passed() { "pass" } else { "fail" }.to_string(),
                    ]
                })
                .collect();
            rows.push(vec![
                "temporal_signalling".into(),
                num(shift),
                num(SIGNALLING_WITNESS),
                if witness_ok { "pass" } else { "fail" }.into(),
            ]);
            csv_string(&["suite", "max_deviation", "tolerance", "status"], &rows)
        }
    };
    emit(cli, &text)?;
    Ok(if all_ok { EXIT_OK } else { EXIT_FAILURE })
}
