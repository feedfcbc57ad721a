//! Nonatomic congestion games: facilities with load-dependent costs,
//! weighted commodities over explicit action sets or network routes, the
//! load map, potential and social-cost functionals, and tax functions.

use thiserror::Error;

use crate::netgame::{self, NetError, Network};
use crate::pwl::{PiecewiseLinear, PwlError};

/// Weights at or below this threshold count as off-support; solver outputs
/// are approximate.
pub const SUPPORT_TOL: f64 = 1e-9;

const CHECK_GRID: usize = 1024;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("malformed game: {0}")]
    Shape(String),
    #[error("facility {facility}: {reason}")]
    Assumption { facility: usize, reason: String },
    #[error("commodity weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("infeasible strategy or load: {0}")]
    Infeasible(String),
    #[error("load {0} outside [0, 1]")]
    Domain(f64),
    #[error("operation needs explicit action sets")]
    RequiresExplicitActions,
    #[error("network: {0}")]
    Net(#[from] NetError),
    #[error("piecewise linear: {0}")]
    Pwl(#[from] PwlError),
}

/// Analytic facility cost `c_f : [0, 1] → [0, 1]`.
///
/// The supported kinds have closed-form derivatives and antiderivatives,
/// which keeps potential evaluation exact. Construction of a
/// [`GameInstance`] validates monotonicity, the range, and monotonicity of
/// the marginal-cost tax `u·c′(u)` on a dense grid.
#[derive(Debug, Clone, PartialEq)]
pub enum CostFunction {
    Constant(f64),
    Affine { intercept: f64, slope: f64 },
    /// Coefficients in increasing degree order: `c(u) = Σ coef[k]·u^k`.
    Polynomial(Vec<f64>),
    Monomial { scale: f64, power: u32 },
}

impl CostFunction {
    pub fn value(&self, u: f64) -> f64 {
        match self {
            CostFunction::Constant(v) => *v,
            CostFunction::Affine { intercept, slope } => intercept + slope * u,
            CostFunction::Polynomial(coefs) => {
                coefs.iter().rev().fold(0.0, |acc, c| acc * u + c)
            }
            CostFunction::Monomial { scale, power } => scale * u.powi(*power as i32),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            CostFunction::Constant(_) => 0.0,
            CostFunction::Affine { slope, .. } => *slope,
            CostFunction::Polynomial(coefs) => {
                let mut acc = 0.0;
                for (k, c) in coefs.iter().enumerate().skip(1).rev() {
                    acc = acc * u + k as f64 * c;
                }
                acc
            }
            CostFunction::Monomial { scale, power } => {
                if *power == 0 {
                    0.0
                } else {
                    scale * f64::from(*power) * u.powi(*power as i32 - 1)
                }
            }
        }
    }

    /// `∫₀ᵘ c(t) dt`, closed form.
    pub fn antiderivative(&self, u: f64) -> f64 {
        match self {
            CostFunction::Constant(v) => v * u,
            CostFunction::Affine { intercept, slope } => intercept * u + 0.5 * slope * u * u,
            CostFunction::Polynomial(coefs) => {
                let mut acc = 0.0;
                for (k, c) in coefs.iter().enumerate().rev() {
                    acc = acc * u + c / (k as f64 + 1.0);
                }
                acc * u
            }
            CostFunction::Monomial { scale, power } => {
                scale * u.powi(*power as i32 + 1) / f64::from(power + 1)
            }
        }
    }

    /// Upper bound on the Lipschitz constant of `c′` over `[0, 1]`.
    pub fn smoothness_bound(&self) -> f64 {
        match self {
            CostFunction::Constant(_) | CostFunction::Affine { .. } => 0.0,
            CostFunction::Polynomial(coefs) => coefs
                .iter()
                .enumerate()
                .skip(2)
                .map(|(k, c)| c.abs() * (k as f64) * (k as f64 - 1.0))
                .sum(),
            CostFunction::Monomial { scale, power } => {
                if *power >= 2 {
                    scale.abs() * f64::from(*power) * f64::from(power - 1)
                } else {
                    0.0
                }
            }
        }
    }

    /// Check the standing cost assumptions on a dense grid: values in
    /// `[0, 1]`, `c` non-decreasing, and `u·c′(u)` non-decreasing.
    pub fn validate(&self, facility: usize) -> Result<(), GameError> {
        let reject = |reason: String| Err(GameError::Assumption { facility, reason });
        match self {
            CostFunction::Polynomial(coefs) if coefs.is_empty() => {
                return reject("polynomial needs at least one coefficient".into());
            }
            CostFunction::Monomial { power: 0, .. } => {
                return reject("monomial power must be at least 1; use constant".into());
            }
            _ => {}
        }
        let mut prev_tax = 0.0;
        for j in 0..=CHECK_GRID {
            let u = j as f64 / CHECK_GRID as f64;
            let v = self.value(u);
            if !v.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&v) {
                return reject(format!("value {v} at load {u} outside [0, 1]"));
            }
            let d = self.derivative(u);
            if !d.is_finite() || d < -1e-9 {
                return reject(format!("decreasing cost: c'({u}) = {d}"));
            }
            let tax = u * d;
            if tax < prev_tax - 1e-9 {
                return reject(format!("marginal-cost tax decreasing near load {u}"));
            }
            prev_tax = prev_tax.max(tax);
        }
        Ok(())
    }
}

/// A per-facility tax: a value and an exact integral on `[0, 1]`.
pub trait TaxFunction {
    fn value(&self, u: f64) -> f64;
    /// `∫₀ᵘ τ(t) dt`.
    fn integral(&self, u: f64) -> f64;
    /// Certified lower bound on the subgradient; the taxed potential is
    /// strongly convex in load space when this is positive everywhere.
    fn slope_lower_bound(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroTax;

impl TaxFunction for ZeroTax {
    fn value(&self, _u: f64) -> f64 {
        0.0
    }
    fn integral(&self, _u: f64) -> f64 {
        0.0
    }
}

/// `τ(u) = slope·u`.
#[derive(Debug, Clone, Copy)]
pub struct LinearTax {
    pub slope: f64,
}

impl TaxFunction for LinearTax {
    fn value(&self, u: f64) -> f64 {
        self.slope * u
    }
    fn integral(&self, u: f64) -> f64 {
        0.5 * self.slope * u * u
    }
    fn slope_lower_bound(&self) -> f64 {
        self.slope
    }
}

impl TaxFunction for PiecewiseLinear {
    fn value(&self, u: f64) -> f64 {
        self.eval(u.clamp(0.0, 1.0)).expect("clamped input")
    }
    fn integral(&self, u: f64) -> f64 {
        PiecewiseLinear::integral(self, u.clamp(0.0, 1.0)).expect("clamped input")
    }
    fn slope_lower_bound(&self) -> f64 {
        self.min_slope()
    }
}

/// The marginal-cost tax `τ*(u) = u·c′(u)` of a cost function. Only
/// oracles and tests see it; the learner never does.
#[derive(Debug, Clone)]
pub struct MarginalCostTax<'a> {
    cost: &'a CostFunction,
}

impl TaxFunction for MarginalCostTax<'_> {
    fn value(&self, u: f64) -> f64 {
        u * self.cost.derivative(u)
    }
    /// By parts: `∫₀ᵘ t·c′(t) dt = u·c(u) − ∫₀ᵘ c(t) dt`.
    fn integral(&self, u: f64) -> f64 {
        u * self.cost.value(u) - self.cost.antiderivative(u)
    }
}

pub fn marginal_cost_tax(cost: &CostFunction) -> MarginalCostTax<'_> {
    MarginalCostTax { cost }
}

/// One commodity: a weight and either an explicit action list (each action
/// a set of facility indices) or a source/target pair routed over a network.
#[derive(Debug, Clone)]
pub struct Commodity {
    weight: f64,
    actions: ActionSet,
}

#[derive(Debug, Clone)]
pub enum ActionSet {
    Explicit(Vec<Vec<usize>>),
    Route { source: usize, target: usize },
}

impl Commodity {
    pub fn explicit(weight: f64, actions: Vec<Vec<usize>>) -> Self {
        Commodity {
            weight,
            actions: ActionSet::Explicit(actions),
        }
    }

    pub fn route(weight: f64, source: usize, target: usize) -> Self {
        Commodity {
            weight,
            actions: ActionSet::Route { source, target },
        }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn explicit_actions(&self) -> Result<&[Vec<usize>], GameError> {
        match &self.actions {
            ActionSet::Explicit(a) => Ok(a),
            ActionSet::Route { .. } => Err(GameError::RequiresExplicitActions),
        }
    }

    pub fn route_endpoints(&self) -> Option<(usize, usize)> {
        match self.actions {
            ActionSet::Route { source, target } => Some((source, target)),
            ActionSet::Explicit(_) => None,
        }
    }
}

/// An immutable congestion-game instance. Construction validates the cost
/// assumptions, commodity weights, and action shapes.
#[derive(Debug, Clone)]
pub struct GameInstance {
    costs: Vec<CostFunction>,
    commodities: Vec<Commodity>,
    network: Option<Network>,
}

impl GameInstance {
    pub fn new(
        costs: Vec<CostFunction>,
        commodities: Vec<Commodity>,
        network: Option<Network>,
    ) -> Result<Self, GameError> {
        if costs.is_empty() {
            return Err(GameError::Shape("no facilities".into()));
        }
        if commodities.is_empty() {
            return Err(GameError::Shape("no commodities".into()));
        }
        for (f, cost) in costs.iter().enumerate() {
            cost.validate(f)?;
        }
        if let Some(net) = &network {
            if net.edge_count() != costs.len() {
                return Err(GameError::Shape(format!(
                    "network has {} edges but {} costs were given",
                    net.edge_count(),
                    costs.len()
                )));
            }
        }
        let total: f64 = commodities.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(GameError::WeightSum(total));
        }
        for (i, commodity) in commodities.iter().enumerate() {
            if !(0.0..=1.0).contains(&commodity.weight) {
                return Err(GameError::Shape(format!("commodity {i} weight out of range")));
            }
            match &commodity.actions {
                ActionSet::Explicit(actions) => {
                    if actions.is_empty() {
                        return Err(GameError::Shape(format!("commodity {i} has no actions")));
                    }
                    for action in actions {
                        if action.is_empty() {
                            return Err(GameError::Shape(format!(
                                "commodity {i} has an empty action"
                            )));
                        }
                        let mut sorted = action.clone();
                        sorted.sort_unstable();
                        sorted.dedup();
                        if sorted.len() != action.len() {
                            return Err(GameError::Shape(format!(
                                "commodity {i} action repeats a facility"
                            )));
                        }
                        if sorted.iter().any(|&f| f >= costs.len()) {
                            return Err(GameError::Shape(format!(
                                "commodity {i} action references a missing facility"
                            )));
                        }
                    }
                }
                ActionSet::Route { source, target } => {
                    let net = network.as_ref().ok_or_else(|| {
                        GameError::Shape(format!("commodity {i} routes but no network given"))
                    })?;
                    if *source == *target {
                        return Err(GameError::Shape(format!(
                            "commodity {i} has equal source and target"
                        )));
                    }
                    if !net.is_reachable(*source, *target) {
                        return Err(GameError::Shape(format!(
                            "commodity {i}: target unreachable from source"
                        )));
                    }
                }
            }
        }
        Ok(GameInstance {
            costs,
            commodities,
            network,
        })
    }

    pub fn facility_count(&self) -> usize {
        self.costs.len()
    }

    pub fn commodity_count(&self) -> usize {
        self.commodities.len()
    }

    pub fn costs(&self) -> &[CostFunction] {
        &self.costs
    }

    pub fn cost(&self, facility: usize) -> &CostFunction {
        &self.costs[facility]
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn commodity(&self, i: usize) -> &Commodity {
        &self.commodities[i]
    }

    pub fn network(&self) -> Option<&Network> {
        self.network.as_ref()
    }

    pub fn has_route_commodities(&self) -> bool {
        self.commodities
            .iter()
            .any(|c| matches!(c.actions, ActionSet::Route { .. }))
    }

    /// Largest smoothness bound declared by any facility cost.
    pub fn max_smoothness(&self) -> f64 {
        self.costs
            .iter()
            .map(CostFunction::smoothness_bound)
            .fold(0.0, f64::max)
    }

    /// `[c_f(y_f)]_f`, the untaxed cost vector at a load.
    pub fn cost_vector(&self, load: &[f64]) -> Vec<f64> {
        self.costs
            .iter()
            .zip(load)
            .map(|(c, &y)| c.value(y))
            .collect()
    }
}

/// Per-commodity strategy weights: either dense over an explicit action
/// list or sparse over discovered network paths (edge-id sequences).
#[derive(Debug, Clone, PartialEq)]
pub enum CommodityWeights {
    Explicit(Vec<f64>),
    Paths(Vec<(Vec<usize>, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub per_commodity: Vec<CommodityWeights>,
}

impl Strategy {
    /// Uniform weights over each explicit action list.
    pub fn uniform(game: &GameInstance) -> Result<Self, GameError> {
        let per_commodity = game
            .commodities
            .iter()
            .map(|c| {
                let actions = c.explicit_actions()?;
                let n = actions.len() as f64;
                Ok(CommodityWeights::Explicit(vec![c.weight / n; actions.len()]))
            })
            .collect::<Result<_, GameError>>()?;
        Ok(Strategy { per_commodity })
    }

    pub fn validate(&self, game: &GameInstance) -> Result<(), GameError> {
        if self.per_commodity.len() != game.commodity_count() {
            return Err(GameError::Infeasible("commodity count mismatch".into()));
        }
        for (i, (weights, commodity)) in self
            .per_commodity
            .iter()
            .zip(&game.commodities)
            .enumerate()
        {
            let sum = match weights {
                CommodityWeights::Explicit(w) => {
                    let actions = commodity.explicit_actions()?;
                    if w.len() != actions.len() {
                        return Err(GameError::Infeasible(format!(
                            "commodity {i}: weight vector length mismatch"
                        )));
                    }
                    if w.iter().any(|&v| v < -SUPPORT_TOL) {
                        return Err(GameError::Infeasible(format!(
                            "commodity {i}: negative action weight"
                        )));
                    }
                    w.iter().sum::<f64>()
                }
                CommodityWeights::Paths(paths) => {
                    let (source, target) = commodity.route_endpoints().ok_or_else(|| {
                        GameError::Infeasible(format!("commodity {i} is not network-routed"))
                    })?;
                    let net = game.network().expect("validated at construction");
                    for (path, w) in paths {
                        if *w < -SUPPORT_TOL {
                            return Err(GameError::Infeasible(format!(
                                "commodity {i}: negative path weight"
                            )));
                        }
                        net.check_path(source, target, path)?;
                    }
                    paths.iter().map(|(_, w)| w).sum::<f64>()
                }
            };
            if (sum - commodity.weight).abs() > 1e-9 {
                return Err(GameError::Infeasible(format!(
                    "commodity {i}: weights sum to {sum}, expected {}",
                    commodity.weight
                )));
            }
        }
        Ok(())
    }

    /// Distinct facilities used by commodity `i`, with that commodity's
    /// load on each.
    pub fn commodity_load(&self, game: &GameInstance, i: usize) -> Vec<f64> {
        let mut load = vec![0.0; game.facility_count()];
        match &self.per_commodity[i] {
            CommodityWeights::Explicit(w) => {
                let actions = game
                    .commodity(i)
                    .explicit_actions()
                    .expect("shape checked");
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
        load
    }
}

/// Total action cost: the sum of per-facility values over the action.
pub fn action_cost(cost: &[f64], facilities: &[usize]) -> f64 {
    facilities.iter().map(|&f| cost[f]).sum()
}

/// The load map `φ`: `y_f = Σ_i Σ_{a ∋ f} x_{i,a}`. Linear in `x`.
pub fn facility_load(game: &GameInstance, x: &Strategy) -> Result<Vec<f64>, GameError> {
    x.validate(game)?;
    let mut load = vec![0.0; game.facility_count()];
    for i in 0..game.commodity_count() {
        for (f, v) in x.commodity_load(game, i).iter().enumerate() {
            load[f] += v;
        }
    }
    for y in &mut load {
        if *y < -1e-9 || *y > 1.0 + 1e-9 {
            return Err(GameError::Domain(*y));
        }
        *y = y.clamp(0.0, 1.0);
    }
    Ok(load)
}

/// Per-commodity facility loads `y_i = φ_i(x_i)`.
pub fn per_commodity_loads(game: &GameInstance, x: &Strategy) -> Vec<Vec<f64>> {
    (0..game.commodity_count())
        .map(|i| x.commodity_load(game, i))
        .collect()
}

fn check_load(game: &GameInstance, y: &[f64]) -> Result<(), GameError> {
    if y.len() != game.facility_count() {
        return Err(GameError::Infeasible("load length mismatch".into()));
    }
    for &v in y {
        if !(-1e-9..=1.0 + 1e-9).contains(&v) || !v.is_finite() {
            return Err(GameError::Domain(v));
        }
    }
    Ok(())
}

/// Taxed potential `Φ(y; τ) = Σ_f ∫₀^{y_f} [c_f(u) + τ_f(u)] du`, exact via
/// closed-form cost antiderivatives plus per-segment tax integrals.
pub fn potential(
    game: &GameInstance,
    taxes: Option<&[&dyn TaxFunction]>,
    y: &[f64],
) -> Result<f64, GameError> {
    check_load(game, y)?;
    if let Some(taxes) = taxes {
        assert_eq!(taxes.len(), game.facility_count());
    }
    let mut total = 0.0;
    for (f, &yf) in y.iter().enumerate() {
        let yf = yf.clamp(0.0, 1.0);
        total += game.costs[f].antiderivative(yf);
        if let Some(taxes) = taxes {
            total += taxes[f].integral(yf);
        }
    }
    Ok(total)
}

/// Social cost `Ψ(y) = Σ_f y_f·c_f(y_f)`. Taxes are never included.
pub fn social_cost(game: &GameInstance, y: &[f64]) -> Result<f64, GameError> {
    check_load(game, y)?;
    Ok(y.iter()
        .enumerate()
        .map(|(f, &yf)| yf.clamp(0.0, 1.0) * game.costs[f].value(yf.clamp(0.0, 1.0)))
        .sum())
}

/// `Gap_i(x, c)`: cheapest off-support action cost minus the dearest
/// in-support action cost for commodity `i`. Returns `+∞` when every action
/// is in support (the empty minimum is vacuous), so downstream
/// non-negativity tests pass trivially.
pub fn gap(game: &GameInstance, i: usize, x: &Strategy, cost: &[f64]) -> Result<f64, GameError> {
    let actions = game.commodity(i).explicit_actions()?;
    let weights = match &x.per_commodity[i] {
        CommodityWeights::Explicit(w) => w,
        CommodityWeights::Paths(_) => return Err(GameError::RequiresExplicitActions),
    };
    let mut min_off = f64::INFINITY;
    let mut max_in = f64::NEG_INFINITY;
    for (a, &w) in actions.iter().zip(weights) {
        let c = action_cost(cost, a);
        if w > SUPPORT_TOL {
            max_in = max_in.max(c);
        } else {
            min_off = min_off.min(c);
        }
    }
    if max_in == f64::NEG_INFINITY {
        return Err(GameError::Infeasible(format!("commodity {i} has no support")));
    }
    Ok(min_off - max_in)
}

/// Cheapest action cost for commodity `i` under a facility cost vector,
/// enumerating explicit actions or routing over the network.
pub fn min_action_cost(game: &GameInstance, i: usize, cost: &[f64]) -> Result<f64, GameError> {
    match game.commodity(i).actions() {
        ActionSet::Explicit(actions) => Ok(actions
            .iter()
            .map(|a| action_cost(cost, a))
            .fold(f64::INFINITY, f64::min)),
        ActionSet::Route { source, target } => {
            let net = game.network().expect("validated at construction");
            let (_, len) = netgame::min_cost_route(net, cost, *source, *target)?;
            Ok(len)
        }
    }
}

/// Is `x` an ε-equilibrium for facility costs `c`? Every in-support action
/// must cost at most the commodity's best action cost plus `eps`.
pub fn is_epsilon_equilibrium(
    game: &GameInstance,
    x: &Strategy,
    cost: &[f64],
    eps: f64,
) -> Result<bool, GameError> {
    Ok(equilibrium_violation(game, x, cost)? <= eps)
}

/// The largest in-support premium over the best action cost, across
/// commodities; `x` is an ε-equilibrium exactly when this is at most ε.
pub fn equilibrium_violation(
    game: &GameInstance,
    x: &Strategy,
    cost: &[f64],
) -> Result<f64, GameError> {
    let mut worst: f64 = 0.0;
    for i in 0..game.commodity_count() {
        let best = min_action_cost(game, i, cost)?;
        let max_in = match &x.per_commodity[i] {
            CommodityWeights::Explicit(w) => {
                let actions = game.commodity(i).explicit_actions()?;
                actions
                    .iter()
                    .zip(w)
                    .filter(|(_, &v)| v > SUPPORT_TOL)
                    .map(|(a, _)| action_cost(cost, a))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            CommodityWeights::Paths(paths) => paths
                .iter()
                .filter(|(_, v)| *v > SUPPORT_TOL)
                .map(|(p, _)| action_cost(cost, p))
                .fold(f64::NEG_INFINITY, f64::max),
        };
        if max_in > f64::NEG_INFINITY {
            worst = worst.max(max_in - best);
        }
    }
    Ok(worst)
}
