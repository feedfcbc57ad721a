//! Property-level integration tests: the structural facts the learning
//! loop leans on, checked on crafted states, random games, and real runs.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use taxlearn::equilibrium::{self, SimulatedOracle, SolverConfig};
use taxlearn::experiment;
use taxlearn::explore::{self, ExploreOutcome};
use taxlearn::game::{
    self, marginal_cost_tax, Commodity, CommodityWeights, CostFunction, GameInstance, LinearTax,
    Strategy, TaxFunction,
};
use taxlearn::oracles;
use taxlearn::taxdesign::{self, RoundOutcome, RunConfig, RunResult, Termination};

fn pigou_run(c: f64, p: u32, eps: f64) -> (GameInstance, RunResult) {
    let beta = f64::from(p * (p - 1));
    let game = experiment::pigou_network(c, p).expect("valid pigou");
    let tol_eq = taxdesign::recommended_tol_eq(eps, beta);
    let solver = SolverConfig {
        tol_eq,
        ..SolverConfig::default()
    };
    let mut oracle = SimulatedOracle::new(&game, solver);
    let cfg = RunConfig {
        solver_tol_hint: Some(tol_eq),
        ..RunConfig::default()
    };
    let result = taxdesign::run(&game, &mut oracle, eps, beta, &cfg).expect("run succeeds");
    (game, result)
}

/// A random all-or-nothing exploration state on a single-commodity game:
/// all load on one action, taxes arranged so that action is weakly
/// cheapest, wide feasible ranges on unknown facilities.
struct CraftedState {
    game: GameInstance,
    x: Strategy,
    cost: Vec<f64>,
    tau: Vec<f64>,
    unknown: Vec<bool>,
    ranges: Vec<Option<(f64, f64)>>,
}

fn crafted_state(rng: &mut ChaCha8Rng) -> CraftedState {
    let facilities = rng.gen_range(2..=4usize);
    let costs: Vec<CostFunction> = (0..facilities)
        .map(|_| CostFunction::Constant(rng.gen::<f64>() * 0.6 + 0.1))
        .collect();
    // Singleton actions, one per facility, plus sometimes a bundle.
    let mut actions: Vec<Vec<usize>> = (0..facilities).map(|f| vec![f]).collect();
    if facilities >= 3 && rng.gen_bool(0.5) {
        actions.push(vec![0, 1]);
    }
    let game = GameInstance::new(
        costs,
        vec![Commodity::explicit(1.0, actions.clone())],
        None,
    )
    .expect("valid game");
    let cost: Vec<f64> = (0..facilities)
        .map(|f| game.cost(f).value(if f == 0 { 1.0 } else { 0.0 }))
        .collect();
    // All load on action 0 = {facility 0}.
    let mut weights = vec![0.0; actions.len()];
    weights[0] = 1.0;
    let x = Strategy {
        per_commodity: vec![CommodityWeights::Explicit(weights)],
    };
    // Make action 0 weakly cheapest: its tax is zero, others positive.
    let tau: Vec<f64> = (0..facilities)
        .map(|f| if f == 0 { 0.0 } else { rng.gen::<f64>() * 0.3 })
        .collect();
    let unknown: Vec<bool> = (0..facilities).map(|_| rng.gen_bool(0.7)).collect();
    let ranges: Vec<Option<(f64, f64)>> = (0..facilities)
        .map(|f| {
            unknown[f].then(|| {
                let l = (tau[f] - rng.gen::<f64>()).min(tau[f]);
                let r = tau[f] + rng.gen::<f64>() * 2.0;
                (l, r)
            })
        })
        .collect();
    CraftedState {
        game,
        x,
        cost,
        tau,
        unknown,
        ranges,
    }
}

fn min_gap(state: &CraftedState, tax: &[f64]) -> f64 {
    let taxed: Vec<f64> = state.cost.iter().zip(tax).map(|(c, t)| c + t).collect();
    (0..state.game.commodity_count())
        .map(|i| explore::commodity_gap_floor(&state.game, i, &state.x, &taxed).unwrap())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn boundary_probes_are_tight() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut boundaries = 0usize;
    for _ in 0..200 {
        let state = crafted_state(&mut rng);
        if min_gap(&state, &state.tau) < 0.0 {
            continue; // not an equilibrium state; skip the draw
        }
        let (outcome, log) = explore::find_exploratory_tax_logged(
            &state.game,
            &state.x,
            &state.cost,
            &state.tau,
            &state.unknown,
            &state.ranges,
        )
        .expect("explore succeeds");
        if let ExploreOutcome::Probe { tax, facility, sign } = outcome {
            if log.branch == "raise-boundary" || log.branch == "lower-boundary" {
                boundaries += 1;
                let at_boundary = min_gap(&state, &tax);
                assert!(
                    at_boundary.abs() <= 1e-9,
                    "gap at the boundary is {at_boundary}"
                );
                let mut beyond = tax.clone();
                beyond[facility] += f64::from(sign) * 1e-6;
                assert!(
                    min_gap(&state, &beyond) < 0.0,
                    "gap stays nonnegative past the boundary"
                );
            }
        }
    }
    assert!(boundaries >= 20, "only {boundaries} boundary probes sampled");
}

#[test]
fn worst_case_tax_dominates_feasible_taxes() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut checked = 0usize;
    for _ in 0..100 {
        let state = crafted_state(&mut rng);
        if min_gap(&state, &state.tau) < 0.0 {
            continue;
        }
        let per_loads = game::per_commodity_loads(&state.game, &state.x);
        for (i, commodity_load) in per_loads.iter().enumerate() {
            // Worst case for commodity i: fully-loaded unknown facilities at
            // the range top, unloaded ones at the bottom.
            let mut worst = state.tau.clone();
            for f in 0..state.game.facility_count() {
                if !state.unknown[f] {
                    continue;
                }
                let (l, r) = state.ranges[f].unwrap();
                worst[f] = if commodity_load[f] >= 1.0 - 1e-9 { r } else { l };
            }
            let taxed_worst: Vec<f64> =
                state.cost.iter().zip(&worst).map(|(c, t)| c + t).collect();
            let gap_worst =
                explore::commodity_gap_floor(&state.game, i, &state.x, &taxed_worst).unwrap();
            for _ in 0..20 {
                let mut tax = state.tau.clone();
                for (value, range) in tax.iter_mut().zip(&state.ranges) {
                    if let Some((l, r)) = range {
                        *value = l + rng.gen::<f64>() * (r - l);
                    }
                }
                let taxed: Vec<f64> =
                    state.cost.iter().zip(&tax).map(|(c, t)| c + t).collect();
                let gap =
                    explore::commodity_gap_floor(&state.game, i, &state.x, &taxed).unwrap();
                assert!(
                    gap >= gap_worst - 1e-12,
                    "feasible tax undercuts the worst case: {gap} < {gap_worst}"
                );
                checked += 1;
            }
        }
    }
    assert!(checked >= 500, "only {checked} dominance samples");
}

#[test]
fn taxes_differing_at_one_facility_move_that_load() {
    // Three parallel facilities; bumping one facility's tax slope must move
    // that facility's load whenever any load moves.
    let game = GameInstance::new(
        vec![
            CostFunction::Affine { intercept: 0.2, slope: 0.3 },
            CostFunction::Monomial { scale: 0.8, power: 2 },
            CostFunction::Constant(0.35),
        ],
        vec![Commodity::explicit(1.0, vec![vec![0], vec![1], vec![2]])],
        None,
    )
    .unwrap();
    let eps = 0.05;
    let cfg = SolverConfig {
        tol_eq: 1e-11,
        ..SolverConfig::default()
    };
    let base = vec![LinearTax { slope: eps }; 3];
    let bumped = vec![
        LinearTax { slope: 3.0 * eps },
        LinearTax { slope: eps },
        LinearTax { slope: eps },
    ];
    let a = equilibrium::solve_equilibrium(&game, &equilibrium::tax_refs(&base), &cfg).unwrap();
    let b = equilibrium::solve_equilibrium(&game, &equilibrium::tax_refs(&bumped), &cfg).unwrap();
    let band = 2.0 * (2.0 * cfg.tol_eq / eps).sqrt();
    let moved_any = (0..3).any(|f| (a.load[f] - b.load[f]).abs() > 4.0 * band);
    assert!(moved_any, "the bump should move the equilibrium");
    assert!(
        (a.load[0] - b.load[0]).abs() > band,
        "perturbed facility's load did not move: {:?} vs {:?}",
        a.load,
        b.load
    );
}

#[test]
fn known_facility_tax_is_accurate_at_nash_loads() {
    // Whenever a facility is classified known, the applied tax at its Nash
    // load is within 3ε of the marginal-cost tax (plus slack for solver
    // noise). Known facilities are the ones without a feasible range.
    let eps = 0.05;
    let (game, result) = pigou_run(0.2, 2, eps);
    let mut checked = 0usize;
    for record in &result.trace {
        for f in 0..game.facility_count() {
            if record.ranges[f].is_some() {
                continue; // unknown that round
            }
            let y = record.snapped_load[f];
            // Interpolate the applied tax from the round's known-value
            // snapshot: both grid neighbors of a known facility are there.
            let values = &record.known_values[f];
            let below = values
                .iter()
                .filter(|(u, _)| *u <= y + 1e-12)
                .cloned()
                .next_back();
            let above = values.iter().find(|(u, _)| *u >= y - 1e-12).cloned();
            let applied = match (below, above) {
                (Some((u0, v0)), Some((u1, v1))) if u1 > u0 => {
                    v0 + (v1 - v0) * (y - u0) / (u1 - u0)
                }
                (Some((_, v0)), _) => v0,
                _ => continue,
            };
            let truth = marginal_cost_tax(game.cost(f)).value(y);
            assert!(
                (applied - truth).abs() <= 3.0 * eps + 1e-3,
                "round {} facility {f}: applied {applied} vs true {truth}",
                record.round
            );
            checked += 1;
        }
    }
    assert!(checked > 0, "no known facilities were ever observed");
}

#[test]
fn applied_taxes_keep_the_slope_floor() {
    let eps = 0.05;
    let (_, result) = pigou_run(0.6, 2, eps);
    for f in 0..result.plan.facility_count() {
        let applied = result.plan.applied(f);
        assert!(
            applied.min_slope() >= eps - 1e-12,
            "facility {f}: applied slope {} below ε",
            applied.min_slope()
        );
        // The base stays monotone throughout; spot-check the final one.
        assert!(result.plan.hat(f).min_slope() >= -1e-12);
    }
}

#[test]
fn reusing_solver_strategy_reproduces_decisions() {
    let eps = 0.2;
    let beta = 2.0;
    let game = experiment::pigou_network(0.2, 2).unwrap();
    let tol_eq = taxdesign::recommended_tol_eq(eps, beta);
    let solver = SolverConfig {
        tol_eq,
        ..SolverConfig::default()
    };
    let run_with = |reuse: bool| {
        let mut oracle = SimulatedOracle::new(&game, solver);
        let cfg = RunConfig {
            reuse_solver_strategy: reuse,
            solver_tol_hint: Some(tol_eq),
            ..RunConfig::default()
        };
        taxdesign::run(&game, &mut oracle, eps, beta, &cfg).expect("run succeeds")
    };
    let recomputed = run_with(false);
    let reused = run_with(true);
    assert_eq!(recomputed.rounds, reused.rounds);
    assert_eq!(recomputed.termination, reused.termination);
    for (a, b) in recomputed.trace.iter().zip(&reused.trace) {
        match (&a.outcome, &b.outcome) {
            (RoundOutcome::Certified, RoundOutcome::Certified) => {}
            (
                RoundOutcome::Probe {
                    facility: fa,
                    sign: sa,
                    inserted: ia,
                    ..
                },
                RoundOutcome::Probe {
                    facility: fb,
                    sign: sb,
                    inserted: ib,
                    ..
                },
            ) => {
                assert_eq!(fa, fb, "round {}", a.round);
                assert_eq!(sa, sb, "round {}", a.round);
                assert_eq!(ia, ib, "round {}", a.round);
            }
            _ => panic!("round {} outcomes diverge", a.round),
        }
    }
    for f in 0..2 {
        assert_eq!(
            recomputed.plan.hat(f).points(),
            reused.plan.hat(f).points(),
            "facility {f} plans diverge"
        );
    }
}

fn random_small_game(rng: &mut ChaCha8Rng) -> GameInstance {
    loop {
        let facilities = rng.gen_range(2..=4usize);
        let costs: Vec<CostFunction> = (0..facilities)
            .map(|_| match rng.gen_range(0..3) {
                0 => CostFunction::Constant(rng.gen::<f64>() * 0.8 + 0.1),
                1 => CostFunction::Affine {
                    intercept: rng.gen::<f64>() * 0.3,
                    slope: rng.gen::<f64>() * 0.5,
                },
                _ => CostFunction::Monomial {
                    scale: rng.gen::<f64>() * 0.8 + 0.1,
                    power: rng.gen_range(1..=4),
                },
            })
            .collect();
        let m = rng.gen_range(1..=2usize);
        let mut weights = vec![0.0; m];
        let mut rest = 1.0;
        for w in weights.iter_mut().take(m - 1) {
            *w = rng.gen::<f64>() * rest;
            rest -= *w;
        }
        weights[m - 1] = rest;
        let commodities: Vec<Commodity> = weights
            .into_iter()
            .map(|w| {
                let k = rng.gen_range(2..=3usize);
                let actions: Vec<Vec<usize>> = (0..k)
                    .map(|_| {
                        let size = rng.gen_range(1..=2usize.min(facilities));
                        let mut picks: Vec<usize> =
                            (0..facilities).choose_multiple(rng, size);
                        picks.sort_unstable();
                        picks
                    })
                    .collect();
                Commodity::explicit(w, actions)
            })
            .collect();
        if let Ok(game) = GameInstance::new(costs, commodities, None) {
            return game;
        }
    }
}

#[test]
fn learning_terminates_on_random_games() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let mut lower_probes = 0usize;
    for trial in 0..8 {
        let game = random_small_game(&mut rng);
        let eps = 0.2;
        let beta = game.max_smoothness().max(0.5);
        let tol_eq = taxdesign::recommended_tol_eq(eps, beta);
        let solver = SolverConfig {
            tol_eq,
            ..SolverConfig::default()
        };
        let mut oracle = SimulatedOracle::new(&game, solver);
        let cfg = RunConfig {
            solver_tol_hint: Some(tol_eq),
            ..RunConfig::default()
        };
        let result = taxdesign::run(&game, &mut oracle, eps, beta, &cfg)
            .unwrap_or_else(|e| panic!("trial {trial}: {e}"));
        assert_eq!(result.termination, Termination::SubroutineFalse, "trial {trial}");
        assert!(result.exploratory_rounds <= result.loose_round_bound());
        for record in &result.trace {
            if let RoundOutcome::Probe { sign, .. } = record.outcome {
                if sign < 0 {
                    lower_probes += 1;
                }
            }
        }
        if let Ok(report) = oracles::optimal_social_cost(&game) {
            let bound =
                6.0 * eps * game.facility_count() as f64 + 10.0 * (2.0 * tol_eq / eps).sqrt();
            assert!(
                result.final_social_cost - report.value <= bound,
                "trial {trial}: gap {} over bound {bound}",
                result.final_social_cost - report.value
            );
        }
    }
    // Informational: lower-direction probes are rare but legal.
    let _ = lower_probes;
}

#[test]
fn solver_equilibria_nearly_minimize_the_potential() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for trial in 0..10 {
        let game = random_small_game(&mut rng);
        let taxes = vec![LinearTax { slope: 0.05 }; game.facility_count()];
        let refs = equilibrium::tax_refs(&taxes);
        let cfg = SolverConfig {
            tol_eq: 1e-9,
            ..SolverConfig::default()
        };
        let feedback = equilibrium::solve_equilibrium(&game, &refs, &cfg).expect("solver");
        let enumerated = match oracles::equilibrium_by_enumeration(&game, Some(&refs)) {
            Ok(y) => y,
            Err(_) => continue,
        };
        let phi_solver = game::potential(&game, Some(&refs), &feedback.load).unwrap();
        let phi_min = game::potential(&game, Some(&refs), &enumerated).unwrap();
        assert!(
            phi_solver <= phi_min + feedback.certified_eps + 1e-4,
            "trial {trial}: solver potential {phi_solver} vs enumerated {phi_min}"
        );
    }
}

#[test]
fn learning_works_on_multicommodity_networks() {
    // Two commodities share a congesting edge out of the source; each also
    // has a direct alternative. Vertices: 0=s, 1=hub, 2 and 3 targets.
    let net = taxlearn::netgame::Network::new(
        4,
        vec![(0, 1), (1, 2), (1, 3), (0, 2), (0, 3)],
    )
    .unwrap();
    let game = GameInstance::new(
        vec![
            CostFunction::Monomial { scale: 0.9, power: 2 }, // shared s→hub
            CostFunction::Constant(0.1),
            CostFunction::Constant(0.1),
            CostFunction::Affine { intercept: 0.3, slope: 0.2 },
            CostFunction::Affine { intercept: 0.3, slope: 0.2 },
        ],
        vec![Commodity::route(0.5, 0, 2), Commodity::route(0.5, 0, 3)],
        Some(net),
    )
    .unwrap();
    let eps = 0.15;
    let beta = game.max_smoothness();
    let tol_eq = taxdesign::recommended_tol_eq(eps, beta);
    let solver = SolverConfig {
        tol_eq,
        ..SolverConfig::default()
    };
    let mut oracle = SimulatedOracle::new(&game, solver);
    let cfg = RunConfig {
        solver_tol_hint: Some(tol_eq),
        ..RunConfig::default()
    };
    let result = taxdesign::run(&game, &mut oracle, eps, beta, &cfg).expect("run succeeds");
    assert_eq!(result.termination, Termination::SubroutineFalse);
    assert!(result.exploratory_rounds <= result.loose_round_bound());
    let optimal = oracles::optimal_social_cost(&game).unwrap().value;
    let bound = 6.0 * eps * game.facility_count() as f64 + 10.0 * (2.0 * tol_eq / eps).sqrt();
    assert!(result.final_social_cost - optimal <= bound);
}

#[test]
fn learning_also_works_on_explicit_multi_commodity_games() {
    // End-to-end run on a game with bundles and two commodities.
    let game = GameInstance::new(
        vec![
            CostFunction::Monomial { scale: 0.6, power: 2 },
            CostFunction::Affine { intercept: 0.1, slope: 0.3 },
            CostFunction::Constant(0.25),
        ],
        vec![
            Commodity::explicit(0.5, vec![vec![0], vec![1, 2]]),
            Commodity::explicit(0.5, vec![vec![1], vec![2]]),
        ],
        None,
    )
    .unwrap();
    let eps = 0.1;
    let beta = game.max_smoothness().max(1.0);
    let tol_eq = taxdesign::recommended_tol_eq(eps, beta);
    let solver = SolverConfig {
        tol_eq,
        ..SolverConfig::default()
    };
    let mut oracle = SimulatedOracle::new(&game, solver);
    let cfg = RunConfig {
        solver_tol_hint: Some(tol_eq),
        ..RunConfig::default()
    };
    let result = taxdesign::run(&game, &mut oracle, eps, beta, &cfg).expect("run succeeds");
    assert_eq!(result.termination, Termination::SubroutineFalse);
    assert!(result.exploratory_rounds <= result.loose_round_bound());
    // The certified tax is near-optimal: compare against the brute-force
    // optimum within the guarantee's bound.
    let optimal = oracles::optimal_social_cost(&game).unwrap().value;
    let bound = 6.0 * eps * game.facility_count() as f64 + 10.0 * (2.0 * tol_eq / eps).sqrt();
    assert!(
        result.final_social_cost - optimal <= bound,
        "gap {} exceeds {bound}",
        result.final_social_cost - optimal
    );
}
