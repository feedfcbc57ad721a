//! Experiment harness: build games from configs, drive the learning loop,
//! and emit plot-ready CSV traces, learned-tax dumps, and a summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::equilibrium::{SimulatedOracle, SolverConfig};
use crate::game::{Commodity, CostFunction, GameInstance};
use crate::io::{self, fmt_sig};
use crate::netgame::Network;
use crate::oracles;
use crate::taxdesign::{self, RoundOutcome, RunConfig, RunResult, Termination};
use crate::validate;

#[derive(Debug, Clone)]
pub enum GameSource {
    /// Nonlinear Pigou: a two-edge routing network with constant cost `c`
    /// and polynomial cost `u^p`.
    Pigou { c: f64, p: u32 },
    GameFile(PathBuf),
    NetworkFile(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: GameSource,
    pub eps: f64,
    /// Smoothness bound handed to the learner; `None` uses the game's
    /// declared bound.
    pub beta: Option<f64>,
    pub t_max: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub trace_solver: bool,
    pub reuse_solver_strategy: bool,
    /// Allow a deliberately misspecified beta (out of guarantee).
    pub force_beta: bool,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(source: GameSource, eps: f64) -> Self {
        ExperimentConfig {
            source,
            eps,
            beta: None,
            t_max: None,
            out_dir: None,
            trace_solver: false,
            reuse_solver_strategy: false,
            force_beta: false,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("property failure: {0}")]
    Property(String),
    #[error("size error: {0}")]
    Size(String),
}

impl ExperimentError {
    /// Process exit code: 2 config, 3 solver, 4 property, 5 size.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Solver(_) => 3,
            ExperimentError::Property(_) => 4,
            ExperimentError::Size(_) => 5,
        }
    }
}

pub fn build_game(source: &GameSource) -> Result<GameInstance, ExperimentError> {
    match source {
        GameSource::Pigou { c, p } => pigou_network(*c, *p),
        GameSource::GameFile(path) => {
            io::load_game(path).map_err(|e| ExperimentError::Config(e.to_string()))
        }
        GameSource::NetworkFile(path) => {
            io::load_network_game(path).map_err(|e| ExperimentError::Config(e.to_string()))
        }
    }
}

/// The nonlinear Pigou routing game: one source, one target, two parallel
/// edges with costs `c` and `u^p`.
pub fn pigou_network(c: f64, p: u32) -> Result<GameInstance, ExperimentError> {
    if !(0.0 < c && c <= 1.0) {
        return Err(ExperimentError::Config(format!(
            "pigou constant cost must lie in (0, 1], got {c}"
        )));
    }
    if p == 0 {
        return Err(ExperimentError::Config("pigou power must be positive".into()));
    }
    let net = Network::new(2, vec![(0, 1), (0, 1)])
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    GameInstance::new(
        vec![
            CostFunction::Constant(c),
            CostFunction::Monomial { scale: 1.0, power: p },
        ],
        vec![Commodity::route(1.0, 0, 1)],
        Some(net),
    )
    .map_err(|e| ExperimentError::Config(e.to_string()))
}

/// Explicit two-action form of the same game, used by oracles and tests.
pub fn pigou_explicit(c: f64, p: u32) -> Result<GameInstance, ExperimentError> {
    GameInstance::new(
        vec![
            CostFunction::Constant(c),
            CostFunction::Monomial { scale: 1.0, power: p },
        ],
        vec![Commodity::explicit(1.0, vec![vec![0], vec![1]])],
        None,
    )
    .map_err(|e| ExperimentError::Config(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub termination: String,
    pub rounds: usize,
    pub exploratory_rounds: usize,
    pub equilibrium_queries: usize,
    pub final_social_cost: f64,
    pub optimal_social_cost: Option<f64>,
    pub final_gap: Option<f64>,
    pub theoretical_round_bound: f64,
    pub loose_round_bound: usize,
    pub bound_satisfied: bool,
    pub eps: f64,
    pub beta: f64,
    pub grid_resolution: u32,
    pub delta: f64,
    pub tol_eq: f64,
}

fn resolve_beta(cfg: &ExperimentConfig, game: &GameInstance) -> Result<f64, ExperimentError> {
    let declared = game.max_smoothness();
    match cfg.beta {
        None => {
            if declared <= 0.0 {
                Err(ExperimentError::Config(
                    "game declares zero smoothness; pass an explicit beta".into(),
                ))
            } else {
                Ok(declared)
            }
        }
        Some(beta) => {
            if beta + 1e-12 < declared && !cfg.force_beta {
                Err(ExperimentError::Config(format!(
                    "beta {beta} below the declared smoothness {declared}; pass --force-beta to run out of guarantee"
                )))
            } else {
                Ok(beta)
            }
        }
    }
}

/// Reference optimum when the brute-force oracle can afford the game.
pub fn reference_optimum(source: &GameSource, game: &GameInstance) -> Option<f64> {
    match source {
        GameSource::Pigou { c, p } => Some(oracles::pigou_analytic(*c, *p).optimal_social_cost),
        _ => oracles::optimal_social_cost(game).ok().map(|r| r.value),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, ExperimentError> {
    let game = build_game(&cfg.source)?;
    let beta = resolve_beta(cfg, &game)?;
    let tol_eq = taxdesign::recommended_tol_eq(cfg.eps, beta);
    let solver_cfg = SolverConfig {
        tol_eq,
        ..SolverConfig::default()
    };
    let mut oracle = SimulatedOracle::new(&game, solver_cfg);
    if cfg.trace_solver {
        oracle = oracle.with_trace();
    }
    let run_cfg = RunConfig {
        t_max: cfg.t_max,
        reuse_solver_strategy: cfg.reuse_solver_strategy,
        degenerate_floor: None,
        solver_tol_hint: Some(tol_eq),
    };
    let result = taxdesign::run(&game, &mut oracle, cfg.eps, beta, &run_cfg).map_err(|e| match e
    {
        taxdesign::RunError::Params(msg) => ExperimentError::Config(msg),
        other => ExperimentError::Solver(other.to_string()),
    })?;
    let solver_trace = oracle.trace.take();

    let optimum = reference_optimum(&cfg.source, &game);
    let summary = summarize(&result, optimum, tol_eq);
    if let Some(dir) = &cfg.out_dir {
        write_outputs(dir, &result, &summary, solver_trace.as_deref())
            .map_err(|e| ExperimentError::Config(format!("writing outputs: {e}")))?;
    }
    Ok(summary)
}

fn summarize(result: &RunResult, optimum: Option<f64>, tol_eq: f64) -> RunSummary {
    let termination = match result.termination {
        Termination::SubroutineFalse => "subroutine_false",
        Termination::RoundBudgetExhausted => "round_budget_exhausted",
    };
    let final_gap = optimum.map(|o| result.final_social_cost - o);
    let bound_satisfied = result.termination == Termination::SubroutineFalse
        && result.exploratory_rounds <= result.loose_round_bound()
        && result.equilibrium_queries <= 2 * result.rounds;
    RunSummary {
        termination: termination.to_string(),
        rounds: result.rounds,
        exploratory_rounds: result.exploratory_rounds,
        equilibrium_queries: result.equilibrium_queries,
        final_social_cost: result.final_social_cost,
        optimal_social_cost: optimum,
        final_gap,
        theoretical_round_bound: result.theoretical_round_bound(),
        loose_round_bound: result.loose_round_bound(),
        bound_satisfied,
        eps: result.eps,
        beta: result.beta,
        grid_resolution: result.grid.resolution(),
        delta: result.delta,
        tol_eq,
    }
}

fn write_outputs(
    dir: &Path,
    result: &RunResult,
    summary: &RunSummary,
    solver_trace: Option<&[(usize, crate::equilibrium::IterationRow)]>,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;

    // Plot-ready per-round curve.
    let mut trace = String::from("round,social_cost,optimal_social_cost,gap\n");
    for record in &result.trace {
        let optimal = summary.optimal_social_cost.unwrap_or(f64::NAN);
        let _ = writeln!(
            trace,
            "{},{},{},{}",
            record.round,
            fmt_sig(record.social_cost),
            fmt_sig(optimal),
            fmt_sig(record.social_cost - optimal),
        );
    }
    fs::write(dir.join("trace.csv"), trace)?;

    // Per-facility observations per round and phase.
    let mut detail = String::from("round,phase,social_cost,facility,load,cost\n");
    for record in &result.trace {
        for f in 0..record.load.len() {
            let _ = writeln!(
                detail,
                "{},primary,{},{},{},{}",
                record.round,
                fmt_sig(record.social_cost),
                f,
                fmt_sig(record.load[f]),
                fmt_sig(record.cost[f]),
            );
        }
        if let RoundOutcome::Probe {
            perturbed_load,
            perturbed_cost,
            perturbed_social_cost,
            ..
        } = &record.outcome
        {
            for f in 0..perturbed_load.len() {
                let _ = writeln!(
                    detail,
                    "{},perturbed,{},{},{},{}",
                    record.round,
                    fmt_sig(*perturbed_social_cost),
                    f,
                    fmt_sig(perturbed_load[f]),
                    fmt_sig(perturbed_cost[f]),
                );
            }
        }
    }
    fs::write(dir.join("detail.csv"), detail)?;

    for f in 0..result.plan.facility_count() {
        fs::write(
            dir.join(format!("tax_f{f}.csv")),
            result.plan.applied(f).to_csv(),
        )?;
    }

    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(summary).expect("summary serializes"),
    )?;

    if let Some(rows) = solver_trace {
        let mut out = String::from("solve,iteration,potential,fw_gap\n");
        for (solve, row) in rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                solve,
                row.iteration,
                fmt_sig(row.potential),
                fmt_sig(row.fw_gap),
            );
        }
        fs::write(dir.join("solver_trace.csv"), out)?;
    }
    Ok(())
}

/// Oracle reports for a config, as pretty JSON.
pub fn oracle_report_json(cfg: &ExperimentConfig) -> Result<String, ExperimentError> {
    #[derive(Serialize)]
    struct OracleOutput {
        #[serde(skip_serializing_if = "Option::is_none")]
        pigou: Option<oracles::PigouSolution>,
        reports: Vec<oracles::OracleReport>,
        equilibrium_by_enumeration: Option<Vec<f64>>,
    }
    let game = build_game(&cfg.source)?;
    let mut output = OracleOutput {
        pigou: None,
        reports: Vec::new(),
        equilibrium_by_enumeration: None,
    };
    if let GameSource::Pigou { c, p } = cfg.source {
        output.pigou = Some(oracles::pigou_analytic(c, p));
    }
    match oracles::optimal_social_cost(&game) {
        Ok(report) => output.reports.push(report),
        Err(oracles::OracleError::TooLarge(why)) => return Err(ExperimentError::Size(why)),
        Err(e) => return Err(ExperimentError::Config(e.to_string())),
    }
    match oracles::equilibrium_by_enumeration(&game, None) {
        Ok(load) => output.equilibrium_by_enumeration = Some(load),
        Err(oracles::OracleError::TooLarge(why)) => return Err(ExperimentError::Size(why)),
        Err(e) => return Err(ExperimentError::Config(e.to_string())),
    }
    Ok(serde_json::to_string_pretty(&output).expect("output serializes"))
}

/// Run the invariant suite; the report lists one line per named property.
pub fn validate_report(cfg: &ExperimentConfig) -> Result<String, ExperimentError> {
    let game = match build_game(&cfg.source) {
        Ok(game) => game,
        // A game the assumption gates reject is itself a finding: report
        // the rejection under its property name and fail the validation.
        Err(ExperimentError::Config(reason)) => {
            return Err(ExperimentError::Property(format!(
                "FAIL configured-game/cost-assumption-gate: construction rejected: {reason}\n"
            )));
        }
        Err(other) => return Err(other),
    };
    let groups = vec![(
        "configured-game".to_string(),
        validate::run_checks(&game, cfg.seed),
    )];
    let mut out = String::new();
    let mut failures = 0usize;
    for (fixture, results) in &groups {
        for check in results {
            let status = if check.passed { "pass" } else { "FAIL" };
            let _ = writeln!(out, "{status} {fixture}/{}: {}", check.name, check.detail);
            if !check.passed {
                failures += 1;
            }
        }
    }
    if failures > 0 {
        let _ = writeln!(out, "{failures} properties failed");
        return Err(ExperimentError::Property(out));
    }
    Ok(out)
}

/// Default-fixture validation, used when no game is configured.
pub fn validate_default_report(seed: u64) -> Result<String, ExperimentError> {
    let mut out = String::new();
    let mut failures = 0usize;
    for (fixture, results) in validate::default_fixture_checks(seed) {
        for check in results {
            let status = if check.passed { "pass" } else { "FAIL" };
            let _ = writeln!(out, "{status} {fixture}/{}: {}", check.name, check.detail);
            if !check.passed {
                failures += 1;
            }
        }
    }
    if failures > 0 {
        let _ = writeln!(out, "{failures} properties failed");
        return Err(ExperimentError::Property(out));
    }
    Ok(out)
}

/// Run independent (c, p, ε) combinations in parallel worker threads, one
/// output subdirectory per combination.
pub fn run_sweep(
    base: &ExperimentConfig,
    cs: &[f64],
    ps: &[u32],
    epss: &[f64],
) -> Vec<(String, Result<RunSummary, ExperimentError>)> {
    let mut combos = Vec::new();
    for &c in cs {
        for &p in ps {
            for &eps in epss {
                combos.push((c, p, eps));
            }
        }
    }
    let mut results: Vec<Option<(String, Result<RunSummary, ExperimentError>)>> =
        (0..combos.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (slot, &(c, p, eps)) in combos.iter().enumerate() {
            let mut cfg = base.clone();
            handles.push((
                slot,
                scope.spawn(move || {
                    let label = format!("c{c}_p{p}_eps{eps}");
                    cfg.source = GameSource::Pigou { c, p };
                    cfg.eps = eps;
                    cfg.beta = None;
                    if let Some(dir) = &base.out_dir {
                        cfg.out_dir = Some(dir.join(&label));
                    }
                    (label, run_experiment(&cfg))
                }),
            ));
        }
        for (slot, handle) in handles {
            results[slot] = Some(handle.join().expect("worker panicked"));
        }
    });
    results.into_iter().map(|r| r.expect("filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pigou_sources_build() {
        assert!(pigou_network(0.2, 2).is_ok());
        assert!(pigou_explicit(0.2, 2).is_ok());
        assert!(pigou_network(0.0, 2).is_err());
        assert!(pigou_network(0.5, 0).is_err());
    }

    #[test]
    fn beta_resolution_guards_misspecification() {
        let cfg_low = ExperimentConfig {
            beta: Some(0.5),
            ..ExperimentConfig::new(GameSource::Pigou { c: 0.2, p: 2 }, 0.1)
        };
        let game = build_game(&cfg_low.source).unwrap();
        assert!(resolve_beta(&cfg_low, &game).is_err());
        let forced = ExperimentConfig {
            force_beta: true,
            ..cfg_low
        };
        assert!((resolve_beta(&forced, &game).unwrap() - 0.5).abs() < 1e-12);
        let derived = ExperimentConfig::new(GameSource::Pigou { c: 0.2, p: 2 }, 0.1);
        assert!((resolve_beta(&derived, &game).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn experiment_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            out_dir: Some(dir.path().to_path_buf()),
            trace_solver: true,
            ..ExperimentConfig::new(GameSource::Pigou { c: 0.2, p: 2 }, 0.2)
        };
        let summary = run_experiment(&cfg).unwrap();
        assert_eq!(summary.termination, "subroutine_false");
        for file in [
            "trace.csv",
            "detail.csv",
            "tax_f0.csv",
            "tax_f1.csv",
            "summary.json",
            "solver_trace.csv",
        ] {
            assert!(dir.path().join(file).exists(), "{file} missing");
        }
        let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert!(trace.starts_with("round,social_cost,optimal_social_cost,gap\n"));
    }

    #[test]
    fn file_sources_run_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let game_path = dir.path().join("game.json");
        fs::write(
            &game_path,
            r#"{
                "facilities": 2,
                "costs": [
                    {"kind": "constant", "value": 0.3},
                    {"kind": "monomial", "scale": 0.9, "power": 2}
                ],
                "commodities": [{"weight": 1.0, "actions": [[0], [1]]}]
            }"#,
        )
        .unwrap();
        let cfg = ExperimentConfig {
            ..ExperimentConfig::new(GameSource::GameFile(game_path), 0.2)
        };
        let summary = run_experiment(&cfg).unwrap();
        assert_eq!(summary.termination, "subroutine_false");

        let net_path = dir.path().join("net.json");
        fs::write(
            &net_path,
            r#"{
                "vertices": 3,
                "edges": [
                    {"from": 0, "to": 1, "cost": {"kind": "affine", "intercept": 0.1, "slope": 0.3}},
                    {"from": 1, "to": 2, "cost": {"kind": "constant", "value": 0.1}},
                    {"from": 0, "to": 2, "cost": {"kind": "monomial", "scale": 0.8, "power": 2}}
                ],
                "commodities": [{"source": 0, "target": 2, "weight": 1.0}]
            }"#,
        )
        .unwrap();
        let cfg = ExperimentConfig {
            beta: Some(2.0),
            ..ExperimentConfig::new(GameSource::NetworkFile(net_path), 0.2)
        };
        let summary = run_experiment(&cfg).unwrap();
        assert_eq!(summary.termination, "subroutine_false");
    }

    #[test]
    fn identical_configs_produce_identical_outputs() {
        let run = |seed_dir: &Path| {
            let cfg = ExperimentConfig {
                out_dir: Some(seed_dir.to_path_buf()),
                trace_solver: true,
                ..ExperimentConfig::new(GameSource::Pigou { c: 0.6, p: 2 }, 0.2)
            };
            run_experiment(&cfg).unwrap();
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run(d1.path());
        run(d2.path());
        for file in [
            "trace.csv",
            "detail.csv",
            "tax_f0.csv",
            "tax_f1.csv",
            "summary.json",
            "solver_trace.csv",
        ] {
            assert_eq!(
                fs::read(d1.path().join(file)).unwrap(),
                fs::read(d2.path().join(file)).unwrap(),
                "{file} differs between identical runs"
            );
        }
    }
}
