//! Named invariant checks runnable against any game instance: the property
//! suite behind the `validate` subcommand. Each check reports pass/fail
//! plus a short detail line; oversized games skip the brute-force checks
//! rather than fail them.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{self, SolverConfig};
use crate::explore;
use crate::game::{
    self, ActionSet, Commodity, CommodityWeights, CostFunction, GameInstance, LinearTax,
    Strategy, TaxFunction,
};
use crate::netgame;
use crate::oracles::{self, OracleError};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        CheckResult {
            name,
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        CheckResult {
            name,
            passed: false,
            detail: detail.into(),
        }
    }

    fn skipped(name: &'static str, why: impl std::fmt::Display) -> Self {
        CheckResult {
            name,
            passed: true,
            detail: format!("skipped: {why}"),
        }
    }
}

const PAIR_SAMPLES: usize = 1000;
const SLOPE: f64 = 0.05;

fn expanded_actions(game: &GameInstance) -> Result<Vec<Vec<Vec<usize>>>, OracleError> {
    game.commodities()
        .iter()
        .map(|c| match c.actions() {
            ActionSet::Explicit(a) => Ok(a.clone()),
            ActionSet::Route { source, target } => {
                let net = game.network().expect("validated");
                Ok(netgame::enumerate_simple_paths(net, *source, *target, 512)
                    .map_err(|e| OracleError::TooLarge(e.to_string()))?)
            }
        })
        .collect()
}

fn random_strategy(
    game: &GameInstance,
    actions: &[Vec<Vec<usize>>],
    rng: &mut ChaCha8Rng,
) -> Strategy {
    let per_commodity = game
        .commodities()
        .iter()
        .enumerate()
        .map(|(i, commodity)| {
            let k = actions[i].len();
            let mut raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>().max(1e-9)).collect();
            let total: f64 = raw.iter().sum();
            for v in &mut raw {
                *v *= commodity.weight() / total;
            }
            match commodity.actions() {
                ActionSet::Explicit(_) => CommodityWeights::Explicit(raw),
                ActionSet::Route { .. } => CommodityWeights::Paths(
                    actions[i].iter().cloned().zip(raw).collect(),
                ),
            }
        })
        .collect();
    Strategy { per_commodity }
}

fn random_load(game: &GameInstance, actions: &[Vec<Vec<usize>>], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let x = random_strategy(game, actions, rng);
    game::facility_load(game, &x).expect("random strategies are feasible")
}

fn check_load_linearity(
    game: &GameInstance,
    actions: &[Vec<Vec<usize>>],
    rng: &mut ChaCha8Rng,
) -> CheckResult {
    const NAME: &str = "load-linearity";
    for _ in 0..200 {
        let x1 = random_strategy(game, actions, rng);
        let x2 = random_strategy(game, actions, rng);
        let lambda: f64 = rng.gen();
        let y1 = game::facility_load(game, &x1).unwrap();
        let y2 = game::facility_load(game, &x2).unwrap();
        // Mix in weight space.
        let mixed = Strategy {
            per_commodity: x1
                .per_commodity
                .iter()
                .zip(&x2.per_commodity)
                .map(|(a, b)| match (a, b) {
                    (CommodityWeights::Explicit(u), CommodityWeights::Explicit(v)) => {
                        CommodityWeights::Explicit(
                            u.iter()
                                .zip(v)
                                .map(|(p, q)| lambda * p + (1.0 - lambda) * q)
                                .collect(),
                        )
                    }
                    (CommodityWeights::Paths(u), CommodityWeights::Paths(v)) => {
                        CommodityWeights::Paths(
                            u.iter()
                                .zip(v)
                                .map(|((path, p), (_, q))| {
                                    (path.clone(), lambda * p + (1.0 - lambda) * q)
                                })
                                .collect(),
                        )
                    }
                    _ => unreachable!(),
                })
                .collect(),
        };
        let ym = game::facility_load(game, &mixed).unwrap();
        for f in 0..game.facility_count() {
            let blend = lambda * y1[f] + (1.0 - lambda) * y2[f];
            if (ym[f] - blend).abs() > 1e-10 {
                return CheckResult::fail(
                    NAME,
                    format!("facility {f}: |{} − {blend}| > 1e-10", ym[f]),
                );
            }
        }
    }
    CheckResult::pass(NAME, "200 random mixtures")
}

fn check_midpoint_convexity(
    game: &GameInstance,
    actions: &[Vec<Vec<usize>>],
    rng: &mut ChaCha8Rng,
) -> CheckResult {
    const NAME: &str = "midpoint-convexity";
    for _ in 0..PAIR_SAMPLES {
        let y1 = random_load(game, actions, rng);
        let y2 = random_load(game, actions, rng);
        let mid: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| 0.5 * (a + b)).collect();
        let lhs = game::potential(game, None, &y1).unwrap()
            + game::potential(game, None, &y2).unwrap();
        let rhs = 2.0 * game::potential(game, None, &mid).unwrap();
        if lhs < rhs - 1e-10 {
            return CheckResult::fail(NAME, format!("violated by {:.3e}", rhs - lhs));
        }
    }
    CheckResult::pass(NAME, format!("{PAIR_SAMPLES} random load pairs"))
}

fn check_strong_convexity(
    game: &GameInstance,
    actions: &[Vec<Vec<usize>>],
    rng: &mut ChaCha8Rng,
) -> CheckResult {
    const NAME: &str = "strong-convexity";
    let taxes = vec![LinearTax { slope: SLOPE }; game.facility_count()];
    let refs = equilibrium::tax_refs(&taxes);
    for _ in 0..PAIR_SAMPLES {
        let y1 = random_load(game, actions, rng);
        let y2 = random_load(game, actions, rng);
        let phi1 = game::potential(game, Some(&refs), &y1).unwrap();
        let phi2 = game::potential(game, Some(&refs), &y2).unwrap();
        let mut linear = phi1;
        let mut sq = 0.0;
        for f in 0..game.facility_count() {
            let grad = game.cost(f).value(y1[f]) + taxes[f].value(y1[f]);
            linear += grad * (y2[f] - y1[f]);
            sq += (y2[f] - y1[f]).powi(2);
        }
        if phi2 < linear + 0.5 * SLOPE * sq - 1e-10 {
            return CheckResult::fail(
                NAME,
                format!("violated by {:.3e}", linear + 0.5 * SLOPE * sq - phi2),
            );
        }
    }
    CheckResult::pass(NAME, format!("{PAIR_SAMPLES} pairs, slope {SLOPE}"))
}

fn check_gradient(game: &GameInstance, actions: &[Vec<Vec<usize>>], rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "potential-gradient-fd";
    let taxes = vec![LinearTax { slope: SLOPE }; game.facility_count()];
    let refs = equilibrium::tax_refs(&taxes);
    let h = 1e-5;
    for _ in 0..100 {
        let y0 = random_load(game, actions, rng);
        // Central differences need interior points.
        let y: Vec<f64> = y0.iter().map(|v| v.clamp(h, 1.0 - h)).collect();
        for f in 0..game.facility_count() {
            let mut hi = y.clone();
            let mut lo = y.clone();
            hi[f] += h;
            lo[f] -= h;
            let fd = (game::potential(game, Some(&refs), &hi).unwrap()
                - game::potential(game, Some(&refs), &lo).unwrap())
                / (2.0 * h);
            let grad = game.cost(f).value(y[f]) + taxes[f].value(y[f]);
            if (fd - grad).abs() > 1e-6 {
                return CheckResult::fail(
                    NAME,
                    format!("facility {f}: analytic {grad} vs central difference {fd}"),
                );
            }
        }
    }
    CheckResult::pass(NAME, "100 random loads, step 1e-5")
}

fn check_nash_minimizer(game: &GameInstance) -> CheckResult {
    const NAME: &str = "nash-minimizer-gap";
    let taxes = vec![LinearTax { slope: SLOPE }; game.facility_count()];
    let refs = equilibrium::tax_refs(&taxes);
    let feedback = match equilibrium::solve_equilibrium(game, &refs, &SolverConfig::default()) {
        Ok(fb) => fb,
        Err(e) => return CheckResult::fail(NAME, format!("solver failed: {e}")),
    };
    let enumerated = match oracles::equilibrium_by_enumeration(game, Some(&refs)) {
        Ok(y) => y,
        Err(OracleError::TooLarge(why)) => return CheckResult::skipped(NAME, why),
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    let phi_solver = game::potential(game, Some(&refs), &feedback.load).unwrap();
    let phi_min = game::potential(game, Some(&refs), &enumerated).unwrap();
    // An eps-equilibrium is an eps-minimizer; the oracle itself carries
    // grid error of order its refinement step.
    let slack = feedback.certified_eps + 1e-4;
    if phi_solver > phi_min + slack {
        return CheckResult::fail(
            NAME,
            format!("potential {phi_solver} exceeds enumerated minimum {phi_min} + {slack:.1e}"),
        );
    }
    CheckResult::pass(NAME, format!("slack {:.3e}", phi_solver - phi_min))
}

fn check_solver_vs_enumeration(game: &GameInstance) -> CheckResult {
    const NAME: &str = "solver-vs-enumeration";
    let taxes = vec![LinearTax { slope: SLOPE }; game.facility_count()];
    let refs = equilibrium::tax_refs(&taxes);
    let cfg = SolverConfig {
        tol_eq: 1e-10,
        ..SolverConfig::default()
    };
    let feedback = match equilibrium::solve_equilibrium(game, &refs, &cfg) {
        Ok(fb) => fb,
        Err(e) => return CheckResult::fail(NAME, format!("solver failed: {e}")),
    };
    let enumerated = match oracles::equilibrium_by_enumeration(game, Some(&refs)) {
        Ok(y) => y,
        Err(OracleError::TooLarge(why)) => return CheckResult::skipped(NAME, why),
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    for (f, (solved, brute)) in feedback.load.iter().zip(&enumerated).enumerate() {
        if (solved - brute).abs() > 1e-4 {
            return CheckResult::fail(
                NAME,
                format!("facility {f}: solver {solved} vs enumeration {brute}"),
            );
        }
    }
    CheckResult::pass(NAME, "loads agree within 1e-4")
}

fn check_decomposition_roundtrip(
    game: &GameInstance,
    actions: &[Vec<Vec<usize>>],
    rng: &mut ChaCha8Rng,
) -> CheckResult {
    const NAME: &str = "decomposition-roundtrip";
    for _ in 0..50 {
        let x0 = random_strategy(game, actions, rng);
        let y0 = game::facility_load(game, &x0).unwrap();
        let decomposed = if game.has_route_commodities() {
            let loads = game::per_commodity_loads(game, &x0);
            explore::decompose_per_commodity(game, &loads)
        } else {
            explore::decompose(game, &y0)
        };
        let x1 = match decomposed {
            Ok(x) => x,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        let y1 = game::facility_load(game, &x1).unwrap();
        for f in 0..game.facility_count() {
            if (y0[f] - y1[f]).abs() > 1e-8 {
                return CheckResult::fail(
                    NAME,
                    format!("facility {f}: {} reconstructed as {}", y0[f], y1[f]),
                );
            }
        }
    }
    CheckResult::pass(NAME, "50 random loads reconstructed within 1e-8")
}

fn check_flow_reconstruction(game: &GameInstance, rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "flow-decompose-reconstruction";
    let Some(net) = game.network() else {
        return CheckResult::skipped(NAME, "no network");
    };
    for (i, commodity) in game.commodities().iter().enumerate() {
        let Some((source, target)) = commodity.route_endpoints() else {
            continue;
        };
        let paths = match netgame::enumerate_simple_paths(net, source, target, 512) {
            Ok(p) => p,
            Err(e) => return CheckResult::skipped(NAME, e),
        };
        for _ in 0..20 {
            let mut loads = vec![0.0; net.edge_count()];
            let mut raw: Vec<f64> = (0..paths.len()).map(|_| rng.gen::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            for v in &mut raw {
                *v *= commodity.weight() / total;
            }
            for (path, w) in paths.iter().zip(&raw) {
                for &e in path {
                    loads[e] += w;
                }
            }
            let parts = match netgame::flow_decompose(net, source, target, &loads) {
                Ok(p) => p,
                Err(e) => return CheckResult::fail(NAME, format!("commodity {i}: {e}")),
            };
            if parts.len() > net.edge_count() {
                return CheckResult::fail(
                    NAME,
                    format!("commodity {i}: {} parts exceed E", parts.len()),
                );
            }
            let mut rebuilt = vec![0.0; net.edge_count()];
            for (path, w) in &parts {
                for &e in path {
                    rebuilt[e] += w;
                }
            }
            for e in 0..net.edge_count() {
                if (rebuilt[e] - loads[e]).abs() > 1e-9 {
                    return CheckResult::fail(
                        NAME,
                        format!("edge {e}: load {} rebuilt as {}", loads[e], rebuilt[e]),
                    );
                }
            }
        }
    }
    CheckResult::pass(NAME, "random path flows reconstructed within 1e-9")
}

fn check_network_gap_vs_enumeration(game: &GameInstance, rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "network-gap-vs-enumeration";
    let Some(net) = game.network() else {
        return CheckResult::skipped(NAME, "no network");
    };
    if net.vertex_count() > 8 {
        return CheckResult::skipped(NAME, "network larger than 8 vertices");
    }
    let routes: Vec<(usize, usize, usize)> = game
        .commodities()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.route_endpoints().map(|(s, t)| (i, s, t)))
        .collect();
    let paths_per: Vec<(usize, Vec<Vec<usize>>)> = routes
        .iter()
        .map(|&(i, s, t)| {
            (
                i,
                netgame::enumerate_simple_paths(net, s, t, 512).unwrap_or_default(),
            )
        })
        .collect();
    // Explicit twin of the routed commodities for the enumeration side.
    let twin = {
        let commodities: Vec<Commodity> = game
            .commodities()
            .iter()
            .enumerate()
            .map(|(i, c)| match c.actions() {
                ActionSet::Explicit(a) => Commodity::explicit(c.weight(), a.clone()),
                ActionSet::Route { .. } => {
                    let paths = &paths_per.iter().find(|(j, _)| *j == i).unwrap().1;
                    Commodity::explicit(c.weight(), paths.clone())
                }
            })
            .collect();
        GameInstance::new(game.costs().to_vec(), commodities, None).expect("twin is valid")
    };

    let mut compared = 0usize;
    for _ in 0..20 {
        // All-or-nothing state: each commodity fully on one enumerated path.
        let mut net_strategy = Vec::new();
        let mut twin_strategy = Vec::new();
        for (i, commodity) in game.commodities().iter().enumerate() {
            match commodity.actions() {
                ActionSet::Explicit(a) => {
                    let pick = rng.gen_range(0..a.len());
                    let mut w = vec![0.0; a.len()];
                    w[pick] = commodity.weight();
                    net_strategy.push(CommodityWeights::Explicit(w.clone()));
                    twin_strategy.push(CommodityWeights::Explicit(w));
                }
                ActionSet::Route { .. } => {
                    let paths = &paths_per.iter().find(|(j, _)| *j == i).unwrap().1;
                    let pick = rng.gen_range(0..paths.len());
                    let mut w = vec![0.0; paths.len()];
                    w[pick] = commodity.weight();
                    net_strategy.push(CommodityWeights::Paths(vec![(
                        paths[pick].clone(),
                        commodity.weight(),
                    )]));
                    twin_strategy.push(CommodityWeights::Explicit(w));
                }
            }
        }
        let x_net = Strategy {
            per_commodity: net_strategy,
        };
        let x_twin = Strategy {
            per_commodity: twin_strategy,
        };
        let y = game::facility_load(game, &x_net).unwrap();
        let cost = game.cost_vector(&y);
        let tau: Vec<f64> = (0..game.facility_count())
            .map(|_| rng.gen::<f64>() * 0.5)
            .collect();
        for f in 0..game.facility_count() {
            for j in 0..game.commodity_count() {
                let enum_env =
                    match explore::gap_under_test_tax(&twin, j, &x_twin, &cost, &tau, f) {
                        Ok(env) => env,
                        Err(e) => return CheckResult::fail(NAME, e.to_string()),
                    };
                let sweep = |direction| {
                    let paths = match &x_net.per_commodity[j] {
                        CommodityWeights::Paths(p) => p.clone(),
                        CommodityWeights::Explicit(_) => Vec::new(),
                    };
                    if paths.is_empty() {
                        return None; // explicit commodity, nothing to compare
                    }
                    let (s, t) = game.commodity(j).route_endpoints().unwrap();
                    let weights: Vec<f64> =
                        cost.iter().zip(&tau).map(|(c, t)| c + t).collect();
                    let v = game::action_cost(&weights, &paths[0].0);
                    let relation = if paths[0].0.contains(&f) {
                        netgame::LoadRelation::All
                    } else {
                        netgame::LoadRelation::None
                    };
                    Some(
                        netgame::network_gap_sweep(
                            net,
                            &weights,
                            &netgame::GapSweepQuery {
                                source: s,
                                target: t,
                                in_support_cost: v,
                                relation,
                                facility: f,
                                current_tax: tau[f],
                                direction,
                            },
                        )
                        .unwrap(),
                    )
                };
                if let Some(net_hi) = sweep(netgame::SweepDirection::Raise) {
                    compared += 1;
                    let enum_hi = enum_env.upper_boundary();
                    if !boundaries_match(net_hi, enum_hi, 1e-9) {
                        return CheckResult::fail(
                            NAME,
                            format!("raise boundary f={f} j={j}: network {net_hi} vs enumeration {enum_hi}"),
                        );
                    }
                }
                if let Some(net_lo) = sweep(netgame::SweepDirection::Lower) {
                    let enum_lo = enum_env.lower_boundary();
                    // Through-edge legs may form a walk; the walk length
                    // lower-bounds nothing but never dips below the
                    // enumerated boundary.
                    if net_lo < enum_lo - 1e-9 {
                        return CheckResult::fail(
                            NAME,
                            format!("lower boundary f={f} j={j}: network {net_lo} below enumeration {enum_lo}"),
                        );
                    }
                }
            }
        }
    }
    CheckResult::pass(NAME, format!("{compared} boundary comparisons"))
}

fn boundaries_match(a: f64, b: f64, tol: f64) -> bool {
    (a.is_infinite() && b.is_infinite() && a.signum() == b.signum()) || (a - b).abs() <= tol
}

/// Run the full suite against one game.
pub fn run_checks(game: &GameInstance, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actions = match expanded_actions(game) {
        Ok(a) => a,
        Err(e) => {
            return vec![CheckResult::fail("action-expansion", e.to_string())];
        }
    };
    vec![
        check_load_linearity(game, &actions, &mut rng),
        check_midpoint_convexity(game, &actions, &mut rng),
        check_strong_convexity(game, &actions, &mut rng),
        check_gradient(game, &actions, &mut rng),
        check_nash_minimizer(game),
        check_solver_vs_enumeration(game),
        check_decomposition_roundtrip(game, &actions, &mut rng),
        check_flow_reconstruction(game, &mut rng),
        check_network_gap_vs_enumeration(game, &mut rng),
    ]
}

fn check_assumption_gate() -> CheckResult {
    const NAME: &str = "cost-assumption-gate";
    let decreasing = GameInstance::new(
        vec![CostFunction::Affine {
            intercept: 0.9,
            slope: -0.5,
        }],
        vec![Commodity::explicit(1.0, vec![vec![0]])],
        None,
    );
    if decreasing.is_ok() {
        return CheckResult::fail(NAME, "decreasing cost was accepted");
    }
    // Monotone cost whose marginal-cost tax u·c′(u) is not monotone.
    let bad_tax = GameInstance::new(
        vec![CostFunction::Polynomial(vec![0.0, 1.0, -0.45])],
        vec![Commodity::explicit(1.0, vec![vec![0]])],
        None,
    );
    if bad_tax.is_ok() {
        return CheckResult::fail(NAME, "non-monotone marginal-cost tax was accepted");
    }
    CheckResult::pass(NAME, "both violating instances rejected at construction")
}

fn check_discontinuity_regression() -> CheckResult {
    const NAME: &str = "tax-discontinuity-regression";
    let g = GameInstance::new(
        vec![
            CostFunction::Constant(1.0),
            CostFunction::Constant(1.0 - 1e-3),
        ],
        vec![Commodity::explicit(1.0, vec![vec![0], vec![1]])],
        None,
    )
    .expect("valid game");
    let zeros = equilibrium::zero_taxes(2);
    let fb0 = match equilibrium::solve_equilibrium(
        &g,
        &equilibrium::tax_refs(&zeros),
        &SolverConfig::default(),
    ) {
        Ok(fb) => fb,
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    let bump = [
        crate::pwl::PiecewiseLinear::constant(0.0),
        crate::pwl::PiecewiseLinear::constant(2e-3),
    ];
    let fb1 = match equilibrium::solve_equilibrium(
        &g,
        &equilibrium::tax_refs(&bump),
        &SolverConfig::default(),
    ) {
        Ok(fb) => fb,
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    if (fb0.load[1] - 1.0).abs() < 1e-9 && (fb1.load[0] - 1.0).abs() < 1e-9 {
        CheckResult::pass(NAME, "a 2e-3 tax flips the full load between facilities")
    } else {
        CheckResult::fail(
            NAME,
            format!("loads {:?} then {:?}", fb0.load, fb1.load),
        )
    }
}

/// Default fixture suite: nonlinear Pigou in both representations plus the
/// construction-gate and discontinuity regressions.
pub fn default_fixture_checks(seed: u64) -> Vec<(String, Vec<CheckResult>)> {
    let explicit = GameInstance::new(
        vec![
            CostFunction::Constant(0.2),
            CostFunction::Monomial { scale: 1.0, power: 2 },
        ],
        vec![Commodity::explicit(1.0, vec![vec![0], vec![1]])],
        None,
    )
    .expect("valid fixture");
    let network = {
        let net = netgame::Network::new(2, vec![(0, 1), (0, 1)]).expect("valid network");
        GameInstance::new(
            vec![
                CostFunction::Constant(0.2),
                CostFunction::Monomial { scale: 1.0, power: 2 },
            ],
            vec![Commodity::route(1.0, 0, 1)],
            Some(net),
        )
        .expect("valid fixture")
    };
    vec![
        ("pigou-explicit".into(), run_checks(&explicit, seed)),
        ("pigou-network".into(), run_checks(&network, seed)),
        (
            "regressions".into(),
            vec![check_assumption_gate(), check_discontinuity_regression()],
        ),
    ]
}
