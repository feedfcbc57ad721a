//! The exploratory-tax subroutine: given equilibrium feedback and feasible
//! per-facility tax ranges, either certify that every feasible tax keeps the
//! current strategy an equilibrium, or produce a "boundary" tax and a
//! facility whose perturbation is guaranteed to move the equilibrium load.
//!
//! Also houses strategy decomposition `x ∈ φ⁻¹(y)`: a phase-1 feasibility
//! program for explicit-action games, per-commodity flow decomposition for
//! network games.

use thiserror::Error;

use crate::game::{
    self, action_cost, ActionSet, CommodityWeights, GameError, GameInstance, Strategy,
    SUPPORT_TOL,
};
use crate::netgame::{self, LoadRelation, NetError};
use crate::simplex;

/// Slack used when checking that inputs really are an equilibrium.
const CONTRACT_TOL: f64 = 1e-7;
/// A worst-case gap below this counts as genuinely negative. Solver
/// certification only guarantees gaps down to the equilibrium tolerance
/// (at most 1e-8), so smaller negatives are noise; when every facility is
/// known the worst case IS the current tax and must certify.
const GAP_NEG_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("unknown facility {facility} carries a fractional share of commodity {commodity}")]
    FractionalUnknown { facility: usize, commodity: usize },
    #[error("boundary sweep exhausted without finding the certified-negative gap")]
    SweepExhausted,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Result of the subroutine: either every feasible tax is certified to keep
/// the equilibrium, or a probe (boundary tax values, facility, perturbation
/// sign).
#[derive(Debug, Clone, PartialEq)]
pub enum ExploreOutcome {
    Certified,
    Probe {
        tax: Vec<f64>,
        facility: usize,
        sign: i8,
    },
}

/// Which unknown facilities carry all (`full`) or none (`empty`) of one
/// commodity's load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommoditySplit {
    pub full: Vec<usize>,
    pub empty: Vec<usize>,
}

/// Per-call record of what the subroutine did; handy when debugging runs.
#[derive(Debug, Clone, Default)]
pub struct ExploreLog {
    pub branch: &'static str,
    pub commodity: Option<usize>,
    pub swept: Vec<(usize, f64)>,
}

/// Find `x ∈ φ⁻¹(y)` for an explicit-action game by solving the phase-1
/// feasibility program over action weights.
pub fn decompose(game: &GameInstance, y: &[f64]) -> Result<Strategy, ExploreError> {
    if game.has_route_commodities() {
        return Err(ExploreError::Decomposition(
            "network games decompose per commodity from solver loads".into(),
        ));
    }
    if y.len() != game.facility_count() {
        return Err(ExploreError::Decomposition("load length mismatch".into()));
    }
    let facilities = game.facility_count();
    let m = game.commodity_count();
    let mut columns = Vec::new();
    let mut owner = Vec::new();
    for i in 0..m {
        let actions = game.commodity(i).explicit_actions()?;
        for a in actions {
            let mut col = vec![0.0; facilities + m];
            for &f in a {
                col[f] = 1.0;
            }
            col[facilities + i] = 1.0;
            columns.push(col);
            owner.push(i);
        }
    }
    let mut rhs = y.to_vec();
    rhs.extend(game.commodities().iter().map(|c| c.weight()));
    let solution = simplex::feasible_point(&columns, &rhs, 1e-8)
        .ok_or_else(|| ExploreError::Decomposition(format!("no strategy maps to load {y:?}")))?;
    let mut per_commodity: Vec<Vec<f64>> = (0..m)
        .map(|i| vec![0.0; game.commodity(i).explicit_actions().unwrap().len()])
        .collect();
    let mut cursor = vec![0usize; m];
    for (j, &value) in solution.iter().enumerate() {
        let i = owner[j];
        per_commodity[i][cursor[i]] = value;
        cursor[i] += 1;
    }
    Ok(Strategy {
        per_commodity: per_commodity
            .into_iter()
            .map(CommodityWeights::Explicit)
            .collect(),
    })
}

/// Decompose per-commodity loads into a strategy: flow decomposition for
/// routed commodities, a small feasibility program for explicit ones.
pub fn decompose_per_commodity(
    game: &GameInstance,
    loads: &[Vec<f64>],
) -> Result<Strategy, ExploreError> {
    if loads.len() != game.commodity_count() {
        return Err(ExploreError::Decomposition(
            "per-commodity load count mismatch".into(),
        ));
    }
    let facilities = game.facility_count();
    let mut per_commodity = Vec::with_capacity(loads.len());
    for (i, y_i) in loads.iter().enumerate() {
        match game.commodity(i).actions() {
            ActionSet::Route { source, target } => {
                let net = game.network().expect("validated at construction");
                let parts = netgame::flow_decompose(net, *source, *target, y_i)?;
                per_commodity.push(CommodityWeights::Paths(parts));
            }
            ActionSet::Explicit(actions) => {
                let mut columns = Vec::with_capacity(actions.len());
                for a in actions {
                    let mut col = vec![0.0; facilities + 1];
                    for &f in a {
                        col[f] = 1.0;
                    }
                    col[facilities] = 1.0;
                    columns.push(col);
                }
                let mut rhs = y_i.clone();
                rhs.push(game.commodity(i).weight());
                let x = simplex::feasible_point(&columns, &rhs, 1e-8).ok_or_else(|| {
                    ExploreError::Decomposition(format!("commodity {i}: infeasible load"))
                })?;
                per_commodity.push(CommodityWeights::Explicit(x));
            }
        }
    }
    Ok(Strategy { per_commodity })
}

/// How the gap of one commodity depends on the tax value `u` at one
/// facility: action costs are `base + u` when the action uses the facility
/// and `base` otherwise, so the gap is a concave piecewise-affine function
/// of `u`. Bases exclude the facility's tax but include its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct GapEnvelope {
    /// Largest base over in-support actions using the facility.
    pub in_with: Option<f64>,
    /// Largest base over in-support actions avoiding it.
    pub in_without: Option<f64>,
    /// Smallest base over off-support actions using it.
    pub off_with: Option<f64>,
    /// Smallest base over off-support actions avoiding it.
    pub off_without: Option<f64>,
}

impl GapEnvelope {
    /// `Gap_j(x, c + τ̃ᵘ)` as a function of `u`; `+∞` with no off-support
    /// actions.
    pub fn gap_at(&self, u: f64) -> f64 {
        let off = match (self.off_with, self.off_without) {
            (None, None) => f64::INFINITY,
            (Some(p), None) => p + u,
            (None, Some(q)) => q,
            (Some(p), Some(q)) => (p + u).min(q),
        };
        let inn = match (self.in_with, self.in_without) {
            (None, None) => f64::NEG_INFINITY,
            (Some(p), None) => p + u,
            (None, Some(q)) => q,
            (Some(p), Some(q)) => (p + u).max(q),
        };
        off - inn
    }

    /// Largest `u` keeping the gap non-negative, assuming it is
    /// non-negative somewhere; the only constraint that tightens upward is
    /// a constant off-support action against a growing in-support cost.
    pub fn upper_boundary(&self) -> f64 {
        match (self.off_without, self.in_with) {
            (Some(q), Some(m)) => q - m,
            _ => f64::INFINITY,
        }
    }

    /// Smallest `u` keeping the gap non-negative: a shrinking off-support
    /// action through the facility against a constant in-support cost.
    pub fn lower_boundary(&self) -> f64 {
        match (self.off_with, self.in_without) {
            (Some(p), Some(m)) => m - p,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Build the gap envelope of commodity `j` for varying the tax at
/// `facility`, by enumerating an explicit action list.
pub fn gap_under_test_tax(
    game: &GameInstance,
    j: usize,
    x: &Strategy,
    cost: &[f64],
    tau: &[f64],
    facility: usize,
) -> Result<GapEnvelope, ExploreError> {
    let actions = game.commodity(j).explicit_actions()?;
    let weights = match &x.per_commodity[j] {
        CommodityWeights::Explicit(w) => w,
        CommodityWeights::Paths(_) => return Err(GameError::RequiresExplicitActions.into()),
    };
    let mut envelope = GapEnvelope {
        in_with: None,
        in_without: None,
        off_with: None,
        off_without: None,
    };
    for (a, &w) in actions.iter().zip(weights) {
        let uses = a.contains(&facility);
        let mut base = 0.0;
        for &g in a {
            base += cost[g];
            if g != facility {
                base += tau[g];
            }
        }
        let in_support = w > SUPPORT_TOL;
        let slot = match (in_support, uses) {
            (true, true) => &mut envelope.in_with,
            (true, false) => &mut envelope.in_without,
            (false, true) => &mut envelope.off_with,
            (false, false) => &mut envelope.off_without,
        };
        *slot = Some(match *slot {
            None => base,
            Some(prev) => {
                if in_support {
                    prev.max(base)
                } else {
                    prev.min(base)
                }
            }
        });
    }
    Ok(envelope)
}

/// Gap envelope for a routed commodity, via three shortest-path calls
/// instead of path enumeration. Boundary-exact: category minima that the
/// network cannot separate are folded into non-binding slots.
fn network_envelope(
    game: &GameInstance,
    j: usize,
    x: &Strategy,
    cost: &[f64],
    tau: &[f64],
    facility: usize,
) -> Result<GapEnvelope, ExploreError> {
    let net = game.network().expect("routed commodity");
    let (source, target) = game.commodity(j).route_endpoints().expect("routed");
    let weights: Vec<f64> = cost.iter().zip(tau).map(|(c, t)| c + t).collect();
    let paths = match &x.per_commodity[j] {
        CommodityWeights::Paths(p) => p,
        CommodityWeights::Explicit(_) => {
            return Err(ExploreError::Contract(format!(
                "commodity {j} is routed but the strategy is explicit"
            )))
        }
    };
    let mut v = f64::NEG_INFINITY;
    let mut on_facility = 0.0;
    let mut total = 0.0;
    for (path, w) in paths {
        if *w > SUPPORT_TOL {
            v = v.max(action_cost(&weights, path));
        }
        total += w;
        if path.contains(&facility) {
            on_facility += w;
        }
    }
    let relation = if on_facility >= total - SUPPORT_TOL && total > SUPPORT_TOL {
        LoadRelation::All
    } else if on_facility <= SUPPORT_TOL {
        LoadRelation::None
    } else {
        return Err(ExploreError::FractionalUnknown {
            facility,
            commodity: j,
        });
    };
    let u0 = tau[facility];
    let through = netgame::shortest_path_through_edge(net, &weights, source, target, facility)?;
    let off_with = if through.is_finite() {
        Some(through - u0)
    } else {
        None
    };
    match relation {
        LoadRelation::All => {
            let detour =
                netgame::shortest_path_avoiding_edge(net, &weights, source, target, facility)?;
            Ok(GapEnvelope {
                in_with: Some(v - u0),
                in_without: None,
                off_with,
                off_without: if detour.is_finite() { Some(detour) } else { None },
            })
        }
        LoadRelation::None => Ok(GapEnvelope {
            in_with: None,
            in_without: Some(v),
            off_with,
            // Off-support detours cost at least the in-support paths and do
            // not move with u; never binding, not separable by Dijkstra.
            off_without: None,
        }),
    }
}

fn envelope(
    game: &GameInstance,
    j: usize,
    x: &Strategy,
    cost: &[f64],
    tau: &[f64],
    facility: usize,
) -> Result<GapEnvelope, ExploreError> {
    match game.commodity(j).actions() {
        ActionSet::Explicit(_) => gap_under_test_tax(game, j, x, cost, tau, facility),
        ActionSet::Route { .. } => network_envelope(game, j, x, cost, tau, facility),
    }
}

/// A lower bound on `Gap_i(x, taxed)`, exact whenever it is negative (the
/// cases the algorithm branches on). Explicit commodities enumerate; routed
/// ones compare the overall shortest path to the in-support cost.
pub fn commodity_gap_floor(
    game: &GameInstance,
    i: usize,
    x: &Strategy,
    taxed: &[f64],
) -> Result<f64, ExploreError> {
    match game.commodity(i).actions() {
        ActionSet::Explicit(_) => Ok(game::gap(game, i, x, taxed)?),
        ActionSet::Route { source, target } => {
            let net = game.network().expect("routed commodity");
            let paths = match &x.per_commodity[i] {
                CommodityWeights::Paths(p) => p,
                CommodityWeights::Explicit(_) => {
                    return Err(ExploreError::Contract(format!(
                        "commodity {i} is routed but the strategy is explicit"
                    )))
                }
            };
            let v = paths
                .iter()
                .filter(|(_, w)| *w > SUPPORT_TOL)
                .map(|(p, _)| action_cost(taxed, p))
                .fold(f64::NEG_INFINITY, f64::max);
            let (_, best) = netgame::min_cost_route(net, taxed, *source, *target)
                .map_err(GameError::Net)?;
            // best < v certifies an off-support improvement of exactly that
            // size; otherwise the gap is non-negative.
            Ok(best - v)
        }
    }
}

fn splits(
    game: &GameInstance,
    per_loads: &[Vec<f64>],
    i: usize,
    unknown: &[bool],
) -> Result<CommoditySplit, ExploreError> {
    let w = game.commodity(i).weight();
    let mut full = Vec::new();
    let mut empty = Vec::new();
    for (f, &is_unknown) in unknown.iter().enumerate() {
        if !is_unknown {
            continue;
        }
        let load = per_loads[i][f];
        if load >= w - SUPPORT_TOL && w > SUPPORT_TOL {
            full.push(f);
        } else if load <= SUPPORT_TOL {
            empty.push(f);
        } else {
            return Err(ExploreError::FractionalUnknown {
                facility: f,
                commodity: i,
            });
        }
    }
    Ok(CommoditySplit { full, empty })
}

/// The exploratory-tax subroutine. Inputs are the current equilibrium
/// strategy `x` (a decomposition of the observed load), the observed cost
/// vector, the applied tax values at the observed loads, the unknown
/// facility mask, and the feasible ranges `[l_f, r_f]` for unknown
/// facilities.
pub fn find_exploratory_tax(
    game: &GameInstance,
    x: &Strategy,
    cost: &[f64],
    tau: &[f64],
    unknown: &[bool],
    ranges: &[Option<(f64, f64)>],
) -> Result<ExploreOutcome, ExploreError> {
    Ok(find_exploratory_tax_logged(game, x, cost, tau, unknown, ranges)?.0)
}

pub fn find_exploratory_tax_logged(
    game: &GameInstance,
    x: &Strategy,
    cost: &[f64],
    tau: &[f64],
    unknown: &[bool],
    ranges: &[Option<(f64, f64)>],
) -> Result<(ExploreOutcome, ExploreLog), ExploreError> {
    let facilities = game.facility_count();
    let m = game.commodity_count();
    assert_eq!(cost.len(), facilities);
    assert_eq!(tau.len(), facilities);
    assert_eq!(unknown.len(), facilities);
    assert_eq!(ranges.len(), facilities);
    let mut log = ExploreLog::default();

    // The inputs must describe an equilibrium under the current tax.
    let taxed: Vec<f64> = cost.iter().zip(tau).map(|(c, t)| c + t).collect();
    for i in 0..m {
        let gap = commodity_gap_floor(game, i, x, &taxed)?;
        if gap < -CONTRACT_TOL {
            return Err(ExploreError::Contract(format!(
                "commodity {i} gap {gap:.3e} under the current tax"
            )));
        }
    }

    let per_loads = game::per_commodity_loads(game, x);

    // A commodity splitting across an unknown facility is already at a
    // boundary: perturbing that facility's tax separates its in-support
    // actions.
    for (f, &is_unknown) in unknown.iter().enumerate() {
        if !is_unknown {
            continue;
        }
        for (i, loads) in per_loads.iter().enumerate() {
            let w = game.commodity(i).weight();
            if loads[f] > SUPPORT_TOL && loads[f] < w - SUPPORT_TOL {
                log.branch = "split-load";
                log.commodity = Some(i);
                return Ok((
                    ExploreOutcome::Probe {
                        tax: tau.to_vec(),
                        facility: f,
                        sign: 1,
                    },
                    log,
                ));
            }
        }
    }

    // Per-commodity worst case: raise every fully-loaded unknown facility
    // to its range top, drop every unloaded one to its bottom. If no
    // commodity's gap goes negative, every feasible tax keeps x an
    // equilibrium.
    let range_of = |f: usize| -> Result<(f64, f64), ExploreError> {
        ranges[f].ok_or_else(|| {
            ExploreError::Contract(format!("unknown facility {f} has no feasible range"))
        })
    };
    let mut trigger: Option<(usize, CommoditySplit)> = None;
    for i in 0..m {
        let split = splits(game, &per_loads, i, unknown)?;
        let mut worst = tau.to_vec();
        for &f in &split.full {
            worst[f] = range_of(f)?.1;
        }
        for &f in &split.empty {
            worst[f] = range_of(f)?.0;
        }
        let taxed_worst: Vec<f64> = cost.iter().zip(&worst).map(|(c, t)| c + t).collect();
        if commodity_gap_floor(game, i, x, &taxed_worst)? < -GAP_NEG_TOL {
            trigger = Some((i, split));
            break;
        }
    }
    let Some((i, split)) = trigger else {
        log.branch = "certified";
        return Ok((ExploreOutcome::Certified, log));
    };
    log.commodity = Some(i);

    // Transform the tax toward commodity i's worst case one facility at a
    // time, stopping at the first range-feasible boundary. Later gap
    // computations see earlier facilities pinned at their endpoints.
    let mut tau_prime = tau.to_vec();
    for &f in &split.full {
        let (_, r_f) = range_of(f)?;
        let mut u_max = f64::INFINITY;
        for j in 0..m {
            let env = envelope(game, j, x, cost, &tau_prime, f)?;
            u_max = u_max.min(env.upper_boundary());
        }
        // Floats only: the current value is always feasible.
        u_max = u_max.max(tau_prime[f]);
        log.swept.push((f, u_max));
        if u_max <= r_f {
            log.branch = "raise-boundary";
            let mut tax = tau_prime;
            tax[f] = u_max;
            return Ok((
                ExploreOutcome::Probe {
                    tax,
                    facility: f,
                    sign: 1,
                },
                log,
            ));
        }
        tau_prime[f] = r_f;
    }
    for &f in &split.empty {
        let (l_f, _) = range_of(f)?;
        let mut u_min = f64::NEG_INFINITY;
        for j in 0..m {
            let env = envelope(game, j, x, cost, &tau_prime, f)?;
            u_min = u_min.max(env.lower_boundary());
        }
        u_min = u_min.min(tau_prime[f]);
        log.swept.push((f, u_min));
        if u_min >= l_f {
            log.branch = "lower-boundary";
            let mut tax = tau_prime;
            tax[f] = u_min;
            return Ok((
                ExploreOutcome::Probe {
                    tax,
                    facility: f,
                    sign: -1,
                },
                log,
            ));
        }
        tau_prime[f] = l_f;
    }
    // The triggering commodity's worst case had a negative gap, so some
    // sweep step must have returned.
    Err(ExploreError::SweepExhausted)
}
