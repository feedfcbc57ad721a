//! Equilibrium feedback: given a tax plan, compute the Nash load
//! `y = argmin_y Φ(y; τ)` and the untaxed cost vector at that load,
//! simulating the player population.
//!
//! The solver is Frank-Wolfe in strategy space. The linear oracle is the
//! per-commodity best response (cheapest action, or shortest path for
//! routed commodities), so feasibility is free. The default step rule
//! drains mass pairwise from the dearest in-support action into the best
//! response with an exact line search, which converges linearly once an
//! ε-slope tax makes the potential strongly convex in load space.

use thiserror::Error;

use crate::game::{
    self, action_cost, ActionSet, CommodityWeights, GameError, GameInstance, Strategy,
    TaxFunction, SUPPORT_TOL,
};
use crate::netgame;
use crate::pwl::PiecewiseLinear;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no convergence after {iterations} iterations (gap {fw_gap:.3e}, certified eps {certified_eps:.3e})")]
    NonConvergence {
        iterations: usize,
        fw_gap: f64,
        certified_eps: f64,
        /// Best iterate found, still a certified `certified_eps`-equilibrium.
        feedback: Box<EquilibriumFeedback>,
    },
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Pairwise transfers with exact line search.
    LineSearch,
    /// Classic Frank-Wolfe with `γ_k = 2/(k+2)`; kept for comparison runs.
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitRule {
    /// Uniform weights per explicit action list; routed commodities start
    /// on their free-flow shortest path.
    Uniform,
    /// All weight on the first action (or the free-flow path).
    FirstAction,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Potential-suboptimality target; the returned strategy is certified
    /// as an eps-equilibrium with eps at most this.
    pub tol_eq: f64,
    pub max_iters: usize,
    pub step_rule: StepRule,
    pub init: InitRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_eq: 1e-8,
            max_iters: 200_000,
            step_rule: StepRule::LineSearch,
            init: InitRule::Uniform,
        }
    }
}

/// What the designer observes after deploying a tax plan (Nash load and
/// Nash cost), plus solver internals exposed only to oracles and tests.
#[derive(Debug, Clone)]
pub struct EquilibriumFeedback {
    pub load: Vec<f64>,
    /// Untaxed facility costs at the load: `cost[f] = c_f(load[f])` exactly.
    pub cost: Vec<f64>,
    pub strategy: Strategy,
    pub per_commodity_load: Vec<Vec<f64>>,
    /// Certified equilibrium slack of `strategy` under the taxed costs.
    pub certified_eps: f64,
    pub fw_gap: f64,
    pub potential: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct IterationRow {
    pub iteration: usize,
    pub potential: f64,
    pub fw_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionChoice {
    Explicit(usize),
    Path(Vec<usize>),
}

/// Minimum-taxed-cost action for one commodity; explicit ties break toward
/// the lowest action index, path ties follow the deterministic Dijkstra
/// order.
pub fn best_response(
    game: &GameInstance,
    i: usize,
    taxed_cost: &[f64],
) -> Result<(ActionChoice, f64), SolverError> {
    match game.commodity(i).actions() {
        ActionSet::Explicit(actions) => {
            let mut best = 0;
            let mut best_cost = f64::INFINITY;
            for (a, facilities) in actions.iter().enumerate() {
                let c = action_cost(taxed_cost, facilities);
                if c < best_cost {
                    best_cost = c;
                    best = a;
                }
            }
            Ok((ActionChoice::Explicit(best), best_cost))
        }
        ActionSet::Route { source, target } => {
            let net = game.network().expect("validated at construction");
            let (path, len) = netgame::min_cost_route(net, taxed_cost, *source, *target)
                .map_err(GameError::Net)?;
            Ok((ActionChoice::Path(path), len))
        }
    }
}

pub fn zero_taxes(facilities: usize) -> Vec<game::ZeroTax> {
    vec![game::ZeroTax; facilities]
}

/// Upcast a uniform tax slice to trait objects for the solver.
pub fn tax_refs<T: TaxFunction>(taxes: &[T]) -> Vec<&dyn TaxFunction> {
    taxes.iter().map(|t| t as &dyn TaxFunction).collect()
}

struct Iterate {
    weights: Vec<CommodityWeights>,
}

impl Iterate {
    fn init(game: &GameInstance, taxes: &[&dyn TaxFunction], init: InitRule) -> Self {
        let free_flow: Vec<f64> = (0..game.facility_count())
            .map(|f| game.cost(f).value(0.0) + taxes[f].value(0.0))
            .collect();
        let weights = game
            .commodities()
            .iter()
            .map(|commodity| match commodity.actions() {
                ActionSet::Explicit(actions) => {
                    let n = actions.len();
                    match init {
                        InitRule::Uniform => {
                            CommodityWeights::Explicit(vec![commodity.weight() / n as f64; n])
                        }
                        InitRule::FirstAction => {
                            let mut w = vec![0.0; n];
                            w[0] = commodity.weight();
                            CommodityWeights::Explicit(w)
                        }
                    }
                }
                ActionSet::Route { source, target } => {
                    let net = game.network().expect("validated at construction");
                    let (path, _) = netgame::min_cost_route(net, &free_flow, *source, *target)
                        .expect("reachability validated at construction");
                    CommodityWeights::Paths(vec![(path, commodity.weight())])
                }
            })
            .collect();
        Iterate { weights }
    }

    fn loads(&self, game: &GameInstance) -> Vec<f64> {
        let mut load = vec![0.0; game.facility_count()];
        for (i, weights) in self.weights.iter().enumerate() {
            match weights {
                CommodityWeights::Explicit(w) => {
                    let actions = game.commodity(i).explicit_actions().expect("shape");
                    for (a, &x) in actions.iter().zip(w) {
                        for &f in a {
                            load[f] += x;
                        }
                    }
                }
                CommodityWeights::Paths(paths) => {
                    for (path, x) in paths {
                        for &f in path {
                            load[f] += x;
                        }
                    }
                }
            }
        }
        for y in &mut load {
            *y = y.clamp(0.0, 1.0);
        }
        load
    }

    fn to_strategy(&self) -> Strategy {
        let per_commodity = self
            .weights
            .iter()
            .map(|w| match w {
                CommodityWeights::Explicit(v) => CommodityWeights::Explicit(v.clone()),
                CommodityWeights::Paths(paths) => CommodityWeights::Paths(
                    paths
                        .iter()
                        .filter(|(_, x)| *x != 0.0)
                        .cloned()
                        .collect(),
                ),
            })
            .collect();
        Strategy { per_commodity }
    }
}

fn taxed_cost(game: &GameInstance, taxes: &[&dyn TaxFunction], load: &[f64]) -> Vec<f64> {
    (0..game.facility_count())
        .map(|f| game.cost(f).value(load[f]) + taxes[f].value(load[f]))
        .collect()
}

/// Exact-ish line search: bisection on the directional derivative of the
/// potential, which is non-decreasing along any feasible direction.
fn line_search(deriv: impl Fn(f64) -> f64, t_max: f64) -> f64 {
    if t_max <= 0.0 || deriv(0.0) >= 0.0 {
        return 0.0;
    }
    if deriv(t_max) <= 0.0 {
        return t_max;
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-18 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Net per-facility load change of moving one unit of mass from one action
/// to another.
fn transfer_delta(from: &[usize], to: &[usize], facilities: usize) -> Vec<(usize, f64)> {
    let mut delta = vec![0.0; facilities];
    for &f in to {
        delta[f] += 1.0;
    }
    for &f in from {
        delta[f] -= 1.0;
    }
    delta
        .into_iter()
        .enumerate()
        .filter(|(_, d)| *d != 0.0)
        .collect()
}

pub fn solve_equilibrium(
    game: &GameInstance,
    taxes: &[&dyn TaxFunction],
    cfg: &SolverConfig,
) -> Result<EquilibriumFeedback, SolverError> {
    solve_inner(game, taxes, cfg, None)
}

pub fn solve_equilibrium_traced(
    game: &GameInstance,
    taxes: &[&dyn TaxFunction],
    cfg: &SolverConfig,
) -> Result<(EquilibriumFeedback, Vec<IterationRow>), SolverError> {
    let mut rows = Vec::new();
    let feedback = solve_inner(game, taxes, cfg, Some(&mut rows))?;
    Ok((feedback, rows))
}

fn solve_inner(
    game: &GameInstance,
    taxes: &[&dyn TaxFunction],
    cfg: &SolverConfig,
    mut trace: Option<&mut Vec<IterationRow>>,
) -> Result<EquilibriumFeedback, SolverError> {
    assert_eq!(taxes.len(), game.facility_count());
    let mut iterate = Iterate::init(game, taxes, cfg.init);

    let mut last = (f64::INFINITY, f64::INFINITY); // (fw_gap, certified_eps)
    let mut iterations = 0;
    for iter in 0..cfg.max_iters {
        iterations = iter;
        let y = iterate.loads(game);
        let tc = taxed_cost(game, taxes, &y);

        // Certify: best response per commodity, pooled-action premiums.
        let mut fw_gap = 0.0;
        let mut certified = 0.0f64;
        let mut responses = Vec::with_capacity(game.commodity_count());
        for i in 0..game.commodity_count() {
            let (choice, best_cost) = best_response(game, i, &tc)?;
            let mut weighted = 0.0;
            let mut max_in: f64 = best_cost;
            match (&iterate.weights[i], game.commodity(i).actions()) {
                (CommodityWeights::Explicit(w), ActionSet::Explicit(actions)) => {
                    for (a, &x) in actions.iter().zip(w.iter()) {
                        let c = action_cost(&tc, a);
                        weighted += x * c;
                        if x > SUPPORT_TOL {
                            max_in = max_in.max(c);
                        }
                    }
                }
                (CommodityWeights::Paths(paths), _) => {
                    for (p, x) in paths {
                        let c = action_cost(&tc, p);
                        weighted += x * c;
                        if *x > SUPPORT_TOL {
                            max_in = max_in.max(c);
                        }
                    }
                }
                _ => unreachable!("iterate shape matches the game"),
            }
            fw_gap += weighted - game.commodity(i).weight() * best_cost;
            certified = certified.max(max_in - best_cost);
            responses.push((choice, best_cost));
        }
        fw_gap = fw_gap.max(0.0);

        if let Some(rows) = trace.as_deref_mut() {
            let potential = game::potential(game, Some(taxes), &y)?;
            rows.push(IterationRow {
                iteration: iter,
                potential,
                fw_gap,
            });
        }
        last = (fw_gap, certified);
        if fw_gap <= cfg.tol_eq && certified <= cfg.tol_eq {
            return Ok(feedback(game, taxes, iterate, certified, fw_gap, iter)?);
        }

        // Make newly discovered paths transferable before stepping.
        for (i, (choice, _)) in responses.iter().enumerate() {
            if let (ActionChoice::Path(path), CommodityWeights::Paths(pool)) =
                (choice, &mut iterate.weights[i])
            {
                if !pool.iter().any(|(p, _)| p == path) {
                    pool.push((path.clone(), 0.0));
                }
            }
        }

        match cfg.step_rule {
            StepRule::Harmonic => {
                let gamma = 2.0 / (iter as f64 + 2.0);
                harmonic_step(game, &mut iterate, &responses, gamma);
            }
            StepRule::LineSearch => {
                for i in 0..game.commodity_count() {
                    pairwise_step(game, taxes, &mut iterate, i);
                }
            }
        }
    }

    let (fw_gap, certified) = last;
    let fb = feedback(game, taxes, iterate, certified, fw_gap, iterations)?;
    Err(SolverError::NonConvergence {
        iterations,
        fw_gap,
        certified_eps: certified,
        feedback: Box::new(fb),
    })
}

/// One pairwise transfer for commodity `i`: drain the dearest in-support
/// action into the cheapest one, stepping by exact line search. Actions
/// are tracked by index; lists may contain duplicates.
fn pairwise_step(
    game: &GameInstance,
    taxes: &[&dyn TaxFunction],
    iterate: &mut Iterate,
    i: usize,
) {
    let y = iterate.loads(game);
    let tc = taxed_cost(game, taxes, &y);
    let facilities = game.facility_count();

    let action_of = |weights: &CommodityWeights, k: usize| -> Vec<usize> {
        match weights {
            CommodityWeights::Explicit(_) => game
                .commodity(i)
                .explicit_actions()
                .expect("shape checked")[k]
                .clone(),
            CommodityWeights::Paths(pool) => pool[k].0.clone(),
        }
    };
    let weight_of = |weights: &CommodityWeights, k: usize| -> f64 {
        match weights {
            CommodityWeights::Explicit(w) => w[k],
            CommodityWeights::Paths(pool) => pool[k].1,
        }
    };
    let count = match &iterate.weights[i] {
        CommodityWeights::Explicit(w) => w.len(),
        CommodityWeights::Paths(pool) => pool.len(),
    };

    // Locate (worst in-support, best) within the commodity's pool.
    let mut best = None;
    let mut best_cost = f64::INFINITY;
    let mut worst = None;
    let mut worst_cost = f64::NEG_INFINITY;
    for k in 0..count {
        let c = action_cost(&tc, &action_of(&iterate.weights[i], k));
        if c < best_cost {
            best_cost = c;
            best = Some(k);
        }
        if weight_of(&iterate.weights[i], k) > 0.0 && c > worst_cost {
            worst_cost = c;
            worst = Some(k);
        }
    }
    let (Some(best), Some(worst)) = (best, worst) else {
        return;
    };
    if worst == best || worst_cost - best_cost <= 0.0 {
        return;
    }
    let from = action_of(&iterate.weights[i], worst);
    let to = action_of(&iterate.weights[i], best);
    let t_max = weight_of(&iterate.weights[i], worst);

    let delta = transfer_delta(&from, &to, facilities);
    let gamma = if delta.is_empty() {
        // Duplicate actions: moving mass between them changes no load, so
        // consolidate outright.
        t_max
    } else {
        let deriv = |gamma: f64| {
            delta
                .iter()
                .map(|&(f, d)| {
                    let u = (y[f] + gamma * d).clamp(0.0, 1.0);
                    (game.cost(f).value(u) + taxes[f].value(u)) * d
                })
                .sum::<f64>()
        };
        line_search(deriv, t_max)
    };
    if gamma <= 0.0 {
        return;
    }
    apply_transfer(&mut iterate.weights[i], worst, best, gamma, t_max);
}

fn apply_transfer(
    weights: &mut CommodityWeights,
    from_idx: usize,
    to_idx: usize,
    gamma: f64,
    t_max: f64,
) {
    match weights {
        CommodityWeights::Explicit(w) => {
            if gamma >= t_max {
                w[to_idx] += w[from_idx];
                w[from_idx] = 0.0;
            } else {
                w[from_idx] -= gamma;
                w[to_idx] += gamma;
            }
        }
        CommodityWeights::Paths(pool) => {
            if gamma >= t_max {
                pool[to_idx].1 += pool[from_idx].1;
                pool[from_idx].1 = 0.0;
            } else {
                pool[from_idx].1 -= gamma;
                pool[to_idx].1 += gamma;
            }
        }
    }
}

/// Classic Frank-Wolfe step toward the best-response vertex.
fn harmonic_step(
    game: &GameInstance,
    iterate: &mut Iterate,
    responses: &[(ActionChoice, f64)],
    gamma: f64,
) {
    for (i, (choice, _)) in responses.iter().enumerate() {
        match (&mut iterate.weights[i], choice) {
            (CommodityWeights::Explicit(w), ActionChoice::Explicit(best)) => {
                let weight = game.commodity(i).weight();
                for v in w.iter_mut() {
                    *v *= 1.0 - gamma;
                }
                w[*best] += gamma * weight;
            }
            (CommodityWeights::Paths(pool), ActionChoice::Path(path)) => {
                let weight = game.commodity(i).weight();
                for (_, v) in pool.iter_mut() {
                    *v *= 1.0 - gamma;
                }
                let idx = pool.iter().position(|(p, _)| p == path).expect("inserted");
                pool[idx].1 += gamma * weight;
            }
            _ => unreachable!(),
        }
    }
}

fn feedback(
    game: &GameInstance,
    taxes: &[&dyn TaxFunction],
    iterate: Iterate,
    certified_eps: f64,
    fw_gap: f64,
    iterations: usize,
) -> Result<EquilibriumFeedback, GameError> {
    let strategy = iterate.to_strategy();
    let load = iterate.loads(game);
    let cost = game.cost_vector(&load);
    let per_commodity_load = game::per_commodity_loads(game, &strategy);
    let potential = game::potential(game, Some(taxes), &load)?;
    Ok(EquilibriumFeedback {
        load,
        cost,
        strategy,
        per_commodity_load,
        certified_eps,
        fw_gap,
        potential,
        iterations,
    })
}

/// The equilibrium-feedback oracle: deploy per-facility tax functions,
/// observe the Nash load and Nash cost. One implementation simulates the
/// players with the solver; tests substitute their own.
pub trait EquilibriumOracle {
    fn observe(&mut self, taxes: &[PiecewiseLinear]) -> Result<EquilibriumFeedback, SolverError>;
}

/// Simulates Protocol-style feedback by solving for the equilibrium of an
/// owned game instance. Counts queries and optionally records per-solve
/// iteration traces.
pub struct SimulatedOracle<'a> {
    game: &'a GameInstance,
    cfg: SolverConfig,
    pub queries: usize,
    pub trace: Option<Vec<(usize, IterationRow)>>,
}

impl<'a> SimulatedOracle<'a> {
    pub fn new(game: &'a GameInstance, cfg: SolverConfig) -> Self {
        SimulatedOracle {
            game,
            cfg,
            queries: 0,
            trace: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn game(&self) -> &GameInstance {
        self.game
    }
}

impl EquilibriumOracle for SimulatedOracle<'_> {
    fn observe(&mut self, taxes: &[PiecewiseLinear]) -> Result<EquilibriumFeedback, SolverError> {
        let refs = tax_refs(taxes);
        self.queries += 1;
        match &mut self.trace {
            None => solve_equilibrium(self.game, &refs, &self.cfg),
            Some(rows) => {
                let solve_id = self.queries - 1;
                let (fb, iteration_rows) = solve_equilibrium_traced(self.game, &refs, &self.cfg)?;
                rows.extend(iteration_rows.into_iter().map(|r| (solve_id, r)));
                Ok(fb)
            }
        }
    }
}
