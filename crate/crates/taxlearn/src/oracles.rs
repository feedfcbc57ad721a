//! Brute-force and analytic references, deliberately independent of the
//! library's closed-form evaluation paths: potentials here are trapezoid
//! sums over dense samples, optima come from grid search plus pattern
//! refinement, and network actions are enumerated outright.

use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::{self, SolverConfig};
use crate::game::{ActionSet, GameError, GameInstance, TaxFunction};
use crate::netgame::{self, NetError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("game too large for brute force: {0}")]
    TooLarge(String),
    #[error("optimal social cost is zero; price of anarchy undefined")]
    UndefinedPoa,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GridSearch1d,
    GridSearchNd,
    PathEnumeration,
    Analytic,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub quantity: String,
    pub value: f64,
    pub method: Method,
    pub resolution: f64,
}

const COARSE_STEP: f64 = 1e-3;
const REFINE_STEP: f64 = 1e-6;
const GRID_BUDGET: f64 = 1_000_000.0;
const PATH_CAP: usize = 512;

/// `∫₀ʸ f` by cumulative trapezoids over dense samples; the oracles' own
/// potential evaluation path, no closed-form antiderivatives involved.
pub struct CumulativeIntegral {
    values: Vec<f64>,
    cumulative: Vec<f64>,
    panels: usize,
}

impl CumulativeIntegral {
    pub fn build(f: impl Fn(f64) -> f64, panels: usize) -> Self {
        let values: Vec<f64> = (0..=panels)
            .map(|i| f(i as f64 / panels as f64))
            .collect();
        let mut cumulative = vec![0.0; panels + 1];
        let h = 1.0 / panels as f64;
        for i in 1..=panels {
            cumulative[i] = cumulative[i - 1] + 0.5 * (values[i - 1] + values[i]) * h;
        }
        CumulativeIntegral {
            values,
            cumulative,
            panels,
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        let t = y * self.panels as f64;
        let i = (t.floor() as usize).min(self.panels - 1);
        let h = 1.0 / self.panels as f64;
        let frac = t - i as f64;
        let fy = self.values[i] + (self.values[i + 1] - self.values[i]) * frac;
        self.cumulative[i] + 0.5 * (self.values[i] + fy) * (frac * h)
    }
}

/// Taxed potential via trapezoid quadrature, a second opinion against the
/// closed-form evaluation.
pub fn potential_quadrature(
    game: &GameInstance,
    taxes: Option<&[&dyn TaxFunction]>,
    y: &[f64],
    panels: usize,
) -> f64 {
    (0..game.facility_count())
        .map(|f| {
            let integral = CumulativeIntegral::build(
                |u| {
                    game.cost(f).value(u)
                        + taxes.map_or(0.0, |t| t[f].value(u))
                },
                panels,
            );
            integral.eval(y[f])
        })
        .sum()
}

/// Explicit facility lists per commodity per action.
type ActionLists = Vec<Vec<Vec<usize>>>;

/// Every commodity's actions as explicit facility lists; routed commodities
/// get their simple paths enumerated.
fn expanded_actions(game: &GameInstance) -> Result<(ActionLists, bool), OracleError> {
    let mut expanded = Vec::with_capacity(game.commodity_count());
    let mut any_routes = false;
    for commodity in game.commodities() {
        match commodity.actions() {
            ActionSet::Explicit(actions) => expanded.push(actions.clone()),
            ActionSet::Route { source, target } => {
                any_routes = true;
                let net = game.network().expect("validated at construction");
                let paths = netgame::enumerate_simple_paths(net, *source, *target, PATH_CAP)
                    .map_err(|e| OracleError::TooLarge(e.to_string()))?;
                expanded.push(paths);
            }
        }
    }
    Ok((expanded, any_routes))
}

fn loads_of(weights: &[Vec<f64>], actions: &[Vec<Vec<usize>>], facilities: usize) -> Vec<f64> {
    let mut y = vec![0.0; facilities];
    for (per_action, action_list) in weights.iter().zip(actions) {
        for (w, a) in per_action.iter().zip(action_list) {
            for &f in a {
                y[f] += w;
            }
        }
    }
    for v in &mut y {
        *v = v.clamp(0.0, 1.0);
    }
    y
}

fn compositions_count(levels: usize, parts: usize) -> f64 {
    // C(levels + parts − 1, parts − 1)
    let mut acc = 1.0f64;
    for j in 1..parts {
        acc *= (levels + j) as f64 / j as f64;
        if acc > GRID_BUDGET * 10.0 {
            return acc;
        }
    }
    acc
}

fn for_each_composition(levels: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn go(rest: usize, slot: usize, buf: &mut [usize], visit: &mut impl FnMut(&[usize])) {
        if slot + 1 == buf.len() {
            buf[slot] = rest;
            visit(buf);
            return;
        }
        for take in 0..=rest {
            buf[slot] = take;
            go(rest - take, slot + 1, buf, visit);
        }
    }
    let mut buf = vec![0usize; parts];
    go(levels, 0, &mut buf, visit);
}

/// Exhaustive grid search over the product of per-commodity simplices,
/// followed by pattern-search refinement down to `REFINE_STEP`.
fn minimize_over_strategies(
    game: &GameInstance,
    actions: &[Vec<Vec<usize>>],
    objective: &impl Fn(&[f64]) -> f64,
) -> Result<(Vec<Vec<f64>>, f64), OracleError> {
    let facilities = game.facility_count();
    let m = game.commodity_count();
    let mut levels = Vec::with_capacity(m);
    let mut budget = 1.0f64;
    for (i, commodity) in game.commodities().iter().enumerate() {
        let n = (commodity.weight() / COARSE_STEP).round().max(0.0) as usize;
        budget *= compositions_count(n, actions[i].len());
        levels.push(n);
    }
    if budget > GRID_BUDGET {
        return Err(OracleError::TooLarge(format!(
            "{budget:.3e} grid points exceeds the {GRID_BUDGET:.0e} budget"
        )));
    }

    // Coarse pass: enumerate the product grid commodity by commodity.
    let mut best_weights: Option<Vec<Vec<f64>>> = None;
    let mut best_value = f64::INFINITY;
    let mut current: Vec<Vec<f64>> = actions.iter().map(|a| vec![0.0; a.len()]).collect();
    #[allow(clippy::too_many_arguments)]
    fn scan(
        i: usize,
        game: &GameInstance,
        actions: &[Vec<Vec<usize>>],
        levels: &[usize],
        facilities: usize,
        current: &mut Vec<Vec<f64>>,
        objective: &impl Fn(&[f64]) -> f64,
        best_value: &mut f64,
        best_weights: &mut Option<Vec<Vec<f64>>>,
    ) {
        if i == actions.len() {
            let y = loads_of(current, actions, facilities);
            let v = objective(&y);
            if v < *best_value {
                *best_value = v;
                *best_weights = Some(current.clone());
            }
            return;
        }
        let w = game.commodity(i).weight();
        let n = levels[i].max(1);
        for_each_composition(levels[i], actions[i].len(), &mut |parts| {
            for (slot, &p) in parts.iter().enumerate() {
                current[i][slot] = w * p as f64 / n as f64;
            }
            scan(
                i + 1,
                game,
                actions,
                levels,
                facilities,
                current,
                objective,
                best_value,
                best_weights,
            );
        });
    }
    scan(
        0,
        game,
        actions,
        &levels,
        facilities,
        &mut current,
        objective,
        &mut best_value,
        &mut best_weights,
    );
    let mut weights = best_weights.expect("grid is never empty");

    // Local refinement: shift mass between action pairs with halving steps.
    let mut step = COARSE_STEP;
    while step > REFINE_STEP {
        step *= 0.5;
        let mut improved = true;
        while improved {
            improved = false;
            for i in 0..m {
                let k = weights[i].len();
                for from in 0..k {
                    if weights[i][from] < step {
                        continue;
                    }
                    for to in 0..k {
                        if to == from {
                            continue;
                        }
                        weights[i][from] -= step;
                        weights[i][to] += step;
                        let y = loads_of(&weights, actions, facilities);
                        let v = objective(&y);
                        if v < best_value - 1e-15 {
                            best_value = v;
                            improved = true;
                        } else {
                            weights[i][from] += step;
                            weights[i][to] -= step;
                        }
                    }
                }
            }
        }
    }
    Ok((weights, best_value))
}

fn grid_method(game: &GameInstance, any_routes: bool) -> Method {
    if any_routes {
        Method::PathEnumeration
    } else if game.commodity_count() == 1
        && game
            .commodity(0)
            .explicit_actions()
            .map(|a| a.len() <= 2)
            .unwrap_or(false)
    {
        Method::GridSearch1d
    } else {
        Method::GridSearchNd
    }
}

/// `min_y Ψ(y)` over feasible loads, by brute force over strategies.
pub fn optimal_social_cost(game: &GameInstance) -> Result<OracleReport, OracleError> {
    let (actions, any_routes) = expanded_actions(game)?;
    let objective = |y: &[f64]| {
        y.iter()
            .enumerate()
            .map(|(f, &v)| v * game.cost(f).value(v))
            .sum::<f64>()
    };
    let (_, value) = minimize_over_strategies(game, &actions, &objective)?;
    Ok(OracleReport {
        quantity: "optimal_social_cost".into(),
        value,
        method: grid_method(game, any_routes),
        resolution: REFINE_STEP,
    })
}

/// Closed-form quantities for the nonlinear Pigou game: constant arm `c`,
/// polynomial arm `u^p`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PigouSolution {
    pub equilibrium_load: f64,
    pub optimal_load: f64,
    pub equilibrium_social_cost: f64,
    pub optimal_social_cost: f64,
}

pub fn pigou_analytic(c: f64, p: u32) -> PigouSolution {
    let p_f = f64::from(p);
    let equilibrium_load = c.powf(1.0 / p_f);
    let optimal_load = (c / (p_f + 1.0)).powf(1.0 / p_f);
    PigouSolution {
        equilibrium_load,
        optimal_load,
        equilibrium_social_cost: c,
        optimal_social_cost: c - c * optimal_load + optimal_load.powi(p as i32 + 1),
    }
}

/// Equilibrium load by brute force: grid-minimize the taxed potential,
/// evaluated with the oracle-side trapezoid integrals.
pub fn equilibrium_by_enumeration(
    game: &GameInstance,
    taxes: Option<&[&dyn TaxFunction]>,
) -> Result<Vec<f64>, OracleError> {
    let (actions, _) = expanded_actions(game)?;
    let integrals: Vec<CumulativeIntegral> = (0..game.facility_count())
        .map(|f| {
            CumulativeIntegral::build(
                |u| game.cost(f).value(u) + taxes.map_or(0.0, |t| t[f].value(u)),
                10_000,
            )
        })
        .collect();
    let objective =
        |y: &[f64]| -> f64 { y.iter().zip(&integrals).map(|(&v, ci)| ci.eval(v)).sum() };
    let (weights, _) = minimize_over_strategies(game, &actions, &objective)?;
    Ok(loads_of(
        &weights,
        &actions,
        game.facility_count(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct PoaReport {
    pub price_of_anarchy: f64,
    pub equilibrium_social_cost: f64,
    pub optimal_social_cost: f64,
    /// The untaxed potential need not be strongly convex, so the solver's
    /// equilibrium may not be the worst one.
    pub caveat: String,
}

/// Diagnostic price of anarchy: the solver's untaxed equilibrium against
/// the brute-force optimum.
pub fn price_of_anarchy(
    game: &GameInstance,
    cfg: &SolverConfig,
) -> Result<PoaReport, OracleError> {
    let zeros = equilibrium::zero_taxes(game.facility_count());
    let refs = equilibrium::tax_refs(&zeros);
    let feedback = equilibrium::solve_equilibrium(game, &refs, cfg)
        .map_err(|e| OracleError::TooLarge(format!("equilibrium solve failed: {e}")))?;
    let ne_cost = crate::game::social_cost(game, &feedback.load)?;
    let optimal = optimal_social_cost(game)?.value;
    if optimal <= 1e-12 {
        return Err(OracleError::UndefinedPoa);
    }
    Ok(PoaReport {
        price_of_anarchy: ne_cost / optimal,
        equilibrium_social_cost: ne_cost,
        optimal_social_cost: optimal,
        caveat: "reports the solver's equilibrium; worst-case equilibria are not searched".into(),
    })
}
