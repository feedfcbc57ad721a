//! The main learning loop. Each round deploys the current tax plan,
//! observes the equilibrium, asks the exploratory subroutine for a boundary
//! tax, perturbs it by ±δ on one facility, and turns the pair of nearby
//! equilibria into a clipped two-point slope estimate at the grid
//! neighbors of the perturbed facility's load.

use thiserror::Error;

use crate::equilibrium::{EquilibriumOracle, SolverError};
use crate::explore::{self, ExploreError, ExploreOutcome};
use crate::game::{self, GameError, GameInstance, Strategy};
use crate::pwl::{clip, Grid, KnownIndexSet, PiecewiseLinear, PwlError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("equilibrium oracle failed: {0}")]
    Oracle(#[from] SolverError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Pwl(#[from] PwlError),
    #[error("round {round}: perturbation of facility {facility} moved its load by only {displacement:.3e} even after a sign flip")]
    DegeneratePerturbation {
        round: usize,
        facility: usize,
        displacement: f64,
    },
    #[error("round {round}: facility {facility} load moved {displacement:.3e}, beyond the locality bound {bound:.3e}")]
    LocalityViolated {
        round: usize,
        facility: usize,
        displacement: f64,
        bound: f64,
    },
}

/// The designer's decision variable: per facility a monotone piece-wise
/// linear base `τ̂_f` plus the slope augmentation, so the applied tax is
/// `τ_f(u) = τ̂_f(u) + ε·u` and every applied segment has slope at least ε.
#[derive(Debug, Clone)]
pub struct TaxPlan {
    eps: f64,
    hats: Vec<PiecewiseLinear>,
}

impl TaxPlan {
    fn init(facilities: usize, eps: f64, beta: f64) -> Self {
        // τ̂(1) starts at β: always an upper bound on the marginal-cost tax
        // at full load.
        let hat = PiecewiseLinear::monotone(vec![(0.0, 0.0), (1.0, beta)]).unwrap();
        TaxPlan {
            eps,
            hats: vec![hat; facilities],
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn facility_count(&self) -> usize {
        self.hats.len()
    }

    pub fn hat(&self, facility: usize) -> &PiecewiseLinear {
        &self.hats[facility]
    }

    /// Applied tax value `τ̂_f(u) + ε·u`.
    pub fn applied_value(&self, facility: usize, u: f64) -> f64 {
        self.hats[facility].eval(u).expect("tax domain is [0,1]") + self.eps * u
    }

    /// The applied tax as a piece-wise linear function (same abscissas as
    /// the base; adding a linear term is exact).
    pub fn applied(&self, facility: usize) -> PiecewiseLinear {
        self.hats[facility].add_linear(self.eps)
    }

    pub fn applied_all(&self) -> Vec<PiecewiseLinear> {
        (0..self.hats.len()).map(|f| self.applied(f)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct DesignerState {
    pub round: usize,
    pub plan: TaxPlan,
    pub known: Vec<KnownIndexSet>,
    pub grid: Grid,
    pub eps: f64,
    pub beta: f64,
    /// Probe perturbation `δ = ε·Δ²/8`.
    pub delta: f64,
}

/// Grid resolution `K = ⌈2β/ε⌉` (nudged against float dust in the ratio).
fn grid_resolution(eps: f64, beta: f64) -> u32 {
    ((2.0 * beta / eps) - 1e-9).ceil().max(1.0) as u32
}

pub fn init_designer(facilities: usize, eps: f64, beta: f64) -> Result<DesignerState, RunError> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(RunError::Params(format!("eps must be positive, got {eps}")));
    }
    if beta <= 0.0 || !beta.is_finite() {
        return Err(RunError::Params(format!("beta must be positive, got {beta}")));
    }
    if facilities == 0 {
        return Err(RunError::Params("no facilities".into()));
    }
    let grid = Grid::new(grid_resolution(eps, beta)).expect("resolution >= 1");
    let spacing = grid.spacing();
    Ok(DesignerState {
        round: 0,
        plan: TaxPlan::init(facilities, eps, beta),
        known: vec![KnownIndexSet::new(grid); facilities],
        grid,
        eps,
        beta,
        delta: eps * spacing * spacing / 8.0,
    })
}

/// Solver tolerance sized so equilibrium noise sits well below the probe
/// perturbation δ the boundary logic distinguishes.
pub fn recommended_tol_eq(eps: f64, beta: f64) -> f64 {
    let grid = Grid::new(grid_resolution(eps, beta)).expect("resolution >= 1");
    let spacing = grid.spacing();
    let delta = eps * spacing * spacing / 8.0;
    (delta / 100.0).min(1e-8)
}

/// A facility is known when both grid neighbors of its (snapped) load are
/// in its known index set; a grid-exact load needs just that one point.
pub fn classify_facilities(state: &DesignerState, load: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut known = Vec::new();
    let mut unknown = Vec::new();
    for (f, &y) in load.iter().enumerate() {
        if facility_is_known(state, f, y) {
            known.push(f);
        } else {
            unknown.push(f);
        }
    }
    (known, unknown)
}

pub fn facility_is_known(state: &DesignerState, facility: usize, load: f64) -> bool {
    let fl = state.grid.floor_index(load).expect("load in [0,1]");
    let ce = state.grid.ceil_index(load).expect("load in [0,1]");
    state.known[facility].contains_index(fl) && state.known[facility].contains_index(ce)
}

/// Feasible values for re-anchoring facility `f`'s tax at the current load:
/// interpolating from the last known index below keeps the applied slope at
/// least ε on the left, and from the first known index above (or 1) on the
/// right.
pub fn feasible_range(
    state: &DesignerState,
    facility: usize,
    load: f64,
) -> Result<(f64, f64), RunError> {
    let below = state.known[facility].floor(load)?;
    let above = state.known[facility].ceil_with_one(load)?;
    let l = state.plan.applied_value(facility, below) + state.eps * (load - below);
    let r = state.plan.applied_value(facility, above) + state.eps * (load - above);
    debug_assert!(l <= r + 1e-12);
    Ok((l, r))
}

/// The two-point update: estimate the cost slope at the grid neighbors of
/// the perturbed facility's load from the equilibrium pair, clip into the
/// known-neighbor bracket, and grow the known set. Raw (unsnapped) loads
/// feed the difference quotient; both observed cost values sit exactly on
/// the cost curve, so the quotient is an exact mean-value slope.
#[allow(clippy::too_many_arguments)]
pub fn update_tax(
    state: &mut DesignerState,
    facility: usize,
    snapped_load: f64,
    raw_load: f64,
    perturbed_load: f64,
    cost: f64,
    perturbed_cost: f64,
) -> Result<Vec<(f64, f64)>, RunError> {
    let fl = state.grid.floor_index(snapped_load)?;
    let ce = state.grid.ceil_index(snapped_load)?;
    let mut candidates = vec![fl];
    if ce != fl {
        candidates.push(ce);
    }
    candidates.retain(|&i| !state.known[facility].contains_index(i));
    if candidates.is_empty() {
        return Err(RunError::Params(format!(
            "facility {facility} already known at load {snapped_load}"
        )));
    }
    let slope = (cost - perturbed_cost) / (raw_load - perturbed_load);
    let hat = &state.plan.hats[facility];
    let lo = hat.eval(state.known[facility].floor(snapped_load)?)?;
    let hi = hat.eval(state.known[facility].ceil_with_one(snapped_load)?)?;
    let mut inserted = Vec::new();
    for &idx in &candidates {
        let u = state.grid.point(idx);
        let value = clip(u * slope, lo, hi)?;
        state.plan.hats[facility] = state.plan.hats[facility].update(u, value)?;
        state.known[facility].insert_index(idx);
        inserted.push((u, value));
    }
    // The base's breakpoints are exactly the known indices plus 1.
    debug_assert_eq!(
        state.plan.hats[facility].points().len(),
        state.known[facility].len() + usize::from(!state.known[facility].contains_value(1.0))
    );
    Ok(inserted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The subroutine certified the tax; the near-optimality guarantee
    /// applies.
    SubroutineFalse,
    RoundBudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub round: usize,
    pub load: Vec<f64>,
    pub snapped_load: Vec<f64>,
    pub cost: Vec<f64>,
    pub social_cost: f64,
    /// Applied tax at each facility's known indices, at observation time.
    pub known_values: Vec<Vec<(f64, f64)>>,
    pub ranges: Vec<Option<(f64, f64)>>,
    pub outcome: RoundOutcome,
}

#[derive(Debug, Clone)]
pub enum RoundOutcome {
    Certified,
    Probe {
        facility: usize,
        sign: i8,
        boundary_tax: Vec<f64>,
        perturbed_load: Vec<f64>,
        perturbed_cost: Vec<f64>,
        perturbed_social_cost: f64,
        inserted: Vec<(f64, f64)>,
        retried: bool,
    },
}

/// Everything the terminal round saw, kept so the certified-tax soundness
/// property can be replayed against random feasible taxes.
#[derive(Debug, Clone)]
pub struct CertifiedState {
    pub strategy: Strategy,
    pub cost: Vec<f64>,
    pub tau: Vec<f64>,
    pub unknown: Vec<bool>,
    pub ranges: Vec<Option<(f64, f64)>>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub plan: TaxPlan,
    pub rounds: usize,
    pub exploratory_rounds: usize,
    pub termination: Termination,
    pub final_load: Vec<f64>,
    pub final_social_cost: f64,
    pub equilibrium_queries: usize,
    pub trace: Vec<RoundRecord>,
    pub certificate: Option<CertifiedState>,
    pub grid: Grid,
    pub eps: f64,
    pub beta: f64,
    pub delta: f64,
}

impl RunResult {
    /// `2Fβ/ε`, the headline round bound of the method.
    pub fn theoretical_round_bound(&self) -> f64 {
        2.0 * self.plan.facility_count() as f64 * self.beta / self.eps
    }

    /// `(K+1)·F`: one exploratory round per known point, at most.
    pub fn loose_round_bound(&self) -> usize {
        (self.grid.resolution() as usize + 1) * self.plan.facility_count()
    }
}

#[derive(Debug, Clone, Copy)]
#[derive(Default)]
pub struct RunConfig {
    /// Round budget; defaults to `⌈2Fβ/ε⌉ + F`.
    pub t_max: Option<usize>,
    /// Reuse the solver's strategy instead of recomputing `x ∈ φ⁻¹(y)`.
    pub reuse_solver_strategy: bool,
    /// Load displacements below this are treated as degenerate probes. The
    /// two-point quotient is an exact mean-value slope at any displacement
    /// (both observations sit on the cost curve), so this only guards
    /// against cancellation; genuine probe displacements scale like
    /// δ/(combined cost and tax slopes), well above the default 1e-12.
    pub degenerate_floor: Option<f64>,
    /// Solver potential tolerance used to size the locality band
    /// `Δ + 4·√(2·tol/ε)`; defaults to [`recommended_tol_eq`].
    pub solver_tol_hint: Option<f64>,
}


fn known_snapshot(state: &DesignerState) -> Vec<Vec<(f64, f64)>> {
    (0..state.plan.facility_count())
        .map(|f| {
            state.known[f]
                .values()
                .map(|u| (u, state.plan.applied_value(f, u)))
                .collect()
        })
        .collect()
}

fn perturbed_realization(
    plan: &TaxPlan,
    snapped_load: &[f64],
    boundary_tax: &[f64],
    facility: usize,
    bump: f64,
) -> Result<Vec<PiecewiseLinear>, PwlError> {
    let mut taxes = Vec::with_capacity(plan.facility_count());
    for f in 0..plan.facility_count() {
        let value = boundary_tax[f] + if f == facility { bump } else { 0.0 };
        taxes.push(plan.applied(f).update(snapped_load[f], value)?);
    }
    Ok(taxes)
}

/// Run the tax-design loop against an equilibrium oracle. The oracle is
/// the only channel to the game's costs; `game` supplies structure (action
/// sets, network) for decomposition and gap computations.
pub fn run(
    game: &GameInstance,
    oracle: &mut dyn EquilibriumOracle,
    eps: f64,
    beta: f64,
    cfg: &RunConfig,
) -> Result<RunResult, RunError> {
    let facilities = game.facility_count();
    let mut state = init_designer(facilities, eps, beta)?;
    let t_max = cfg.t_max.unwrap_or_else(|| {
        (2.0 * facilities as f64 * beta / eps).ceil() as usize + facilities
    });
    let degenerate_floor = cfg.degenerate_floor.unwrap_or(1e-12);
    let tol_hint = cfg
        .solver_tol_hint
        .unwrap_or_else(|| recommended_tol_eq(eps, beta));
    let locality_bound = state.grid.spacing() + 4.0 * (2.0 * tol_hint / eps).sqrt();

    let mut trace: Vec<RoundRecord> = Vec::new();
    let mut queries = 0usize;
    let mut exploratory_rounds = 0usize;

    for round in 1..=t_max {
        state.round = round;
        let applied = state.plan.applied_all();
        let feedback = oracle.observe(&applied)?;
        queries += 1;
        let raw_load = feedback.load.clone();
        let snapped: Vec<f64> = raw_load.iter().map(|&y| state.grid.snap(y)).collect();
        let social = game::social_cost(game, &raw_load)?;

        let unknown_mask: Vec<bool> = (0..facilities)
            .map(|f| !facility_is_known(&state, f, snapped[f]))
            .collect();
        let mut ranges: Vec<Option<(f64, f64)>> = vec![None; facilities];
        for f in 0..facilities {
            if unknown_mask[f] {
                ranges[f] = Some(feasible_range(&state, f, snapped[f])?);
            }
        }
        let tau_values: Vec<f64> = (0..facilities)
            .map(|f| state.plan.applied_value(f, snapped[f]))
            .collect();

        let x = if cfg.reuse_solver_strategy {
            feedback.strategy.clone()
        } else if game.has_route_commodities() {
            explore::decompose_per_commodity(game, &feedback.per_commodity_load)?
        } else {
            explore::decompose(game, &raw_load)?
        };

        let known_values = known_snapshot(&state);
        let outcome =
            explore::find_exploratory_tax(game, &x, &feedback.cost, &tau_values, &unknown_mask, &ranges)?;

        match outcome {
            ExploreOutcome::Certified => {
                trace.push(RoundRecord {
                    round,
                    load: raw_load.clone(),
                    snapped_load: snapped,
                    cost: feedback.cost.clone(),
                    social_cost: social,
                    known_values,
                    ranges: ranges.clone(),
                    outcome: RoundOutcome::Certified,
                });
                return Ok(RunResult {
                    plan: state.plan,
                    rounds: round,
                    exploratory_rounds,
                    termination: Termination::SubroutineFalse,
                    final_load: raw_load,
                    final_social_cost: social,
                    equilibrium_queries: queries,
                    trace,
                    certificate: Some(CertifiedState {
                        strategy: x,
                        cost: feedback.cost,
                        tau: tau_values,
                        unknown: unknown_mask,
                        ranges,
                    }),
                    grid: state.grid,
                    eps,
                    beta,
                    delta: state.delta,
                });
            }
            ExploreOutcome::Probe {
                tax: boundary_tax,
                facility,
                sign,
            } => {
                exploratory_rounds += 1;
                let mut used_sign = sign;
                let bump = f64::from(sign) * state.delta;
                let realization =
                    perturbed_realization(&state.plan, &snapped, &boundary_tax, facility, bump)?;
                let mut perturbed = oracle.observe(&realization)?;
                queries += 1;
                let mut displacement = perturbed.load[facility] - raw_load[facility];
                let mut retried = false;
                if displacement.abs() < degenerate_floor {
                    // Exact equilibrium feedback is an idealization;
                    // try the opposite direction once.
                    retried = true;
                    used_sign = -sign;
                    let flipped = perturbed_realization(
                        &state.plan,
                        &snapped,
                        &boundary_tax,
                        facility,
                        -bump,
                    )?;
                    perturbed = oracle.observe(&flipped)?;
                    queries += 1;
                    displacement = perturbed.load[facility] - raw_load[facility];
                    if displacement.abs() < degenerate_floor {
                        return Err(RunError::DegeneratePerturbation {
                            round,
                            facility,
                            displacement,
                        });
                    }
                }
                if displacement.abs() > locality_bound {
                    return Err(RunError::LocalityViolated {
                        round,
                        facility,
                        displacement,
                        bound: locality_bound,
                    });
                }
                let inserted = update_tax(
                    &mut state,
                    facility,
                    snapped[facility],
                    raw_load[facility],
                    perturbed.load[facility],
                    feedback.cost[facility],
                    perturbed.cost[facility],
                )?;
                debug_assert!(!inserted.is_empty());
                let perturbed_social = game::social_cost(game, &perturbed.load)?;
                trace.push(RoundRecord {
                    round,
                    load: raw_load,
                    snapped_load: snapped,
                    cost: feedback.cost,
                    social_cost: social,
                    known_values,
                    ranges,
                    outcome: RoundOutcome::Probe {
                        facility,
                        sign: used_sign,
                        boundary_tax,
                        perturbed_load: perturbed.load,
                        perturbed_cost: perturbed.cost,
                        perturbed_social_cost: perturbed_social,
                        inserted,
                        retried,
                    },
                });
            }
        }
    }

    let (final_load, final_social) = match trace.last() {
        Some(record) => (record.load.clone(), record.social_cost),
        None => (Vec::new(), f64::NAN),
    };
    Ok(RunResult {
        plan: state.plan,
        rounds: t_max,
        exploratory_rounds,
        termination: Termination::RoundBudgetExhausted,
        final_load,
        final_social_cost: final_social,
        equilibrium_queries: queries,
        trace,
        certificate: None,
        grid: state.grid,
        eps,
        beta,
        delta: state.delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{EquilibriumFeedback, SimulatedOracle, SolverConfig};
    use crate::game::{Commodity, CommodityWeights, CostFunction};

    #[test]
    fn init_designer_constants() {
        let state = init_designer(2, 0.5, 1.0).unwrap();
        assert_eq!(state.grid.resolution(), 4);
        assert!((state.grid.spacing() - 0.25).abs() < 1e-15);
        assert!((state.delta - 0.00390625).abs() < 1e-15);
        // Applied tax at full load is β + ε.
        assert!((state.plan.applied_value(0, 1.0) - 1.5).abs() < 1e-15);
        assert_eq!(state.known[0].len(), 1);
        assert_eq!(state.known[1].floor(0.9).unwrap(), 0.0);
    }

    #[test]
    fn init_rejects_bad_parameters() {
        assert!(init_designer(2, 0.0, 1.0).is_err());
        assert!(init_designer(2, 0.5, -1.0).is_err());
        assert!(init_designer(0, 0.5, 1.0).is_err());
    }

    #[test]
    fn feasible_range_from_initial_state() {
        // ε = 0.1, β = 1: applied τ = {(0,0),(1,1.1)}, K_f = {0}, y = 0.3.
        let state = init_designer(1, 0.1, 1.0).unwrap();
        let (l, r) = feasible_range(&state, 0, 0.3).unwrap();
        assert!((l - 0.03).abs() < 1e-12);
        assert!((r - 1.03).abs() < 1e-12);
    }

    #[test]
    fn classify_respects_known_set() {
        let mut state = init_designer(1, 0.5, 1.0).unwrap(); // K = 4
        assert!(facility_is_known(&state, 0, 0.0));
        assert!(!facility_is_known(&state, 0, 0.3));
        state.known[0].insert_value(0.25).unwrap();
        state.known[0].insert_value(0.5).unwrap();
        assert!(facility_is_known(&state, 0, 0.3));
        let (known, unknown) = classify_facilities(&state, &[0.3]);
        assert_eq!(known, vec![0]);
        assert!(unknown.is_empty());
    }

    #[test]
    fn update_tax_two_point_estimate() {
        // c(u) = u²: loads 0.5 and 0.45 give slope 0.95, estimate 0.475 at
        // u = 0.5 against the true τ*(0.5) = 0.5.
        let mut state = init_designer(1, 0.5, 1.0).unwrap(); // grid {0,.25,.5,.75,1}
        let inserted = update_tax(&mut state, 0, 0.5, 0.5, 0.45, 0.25, 0.2025).unwrap();
        assert_eq!(inserted.len(), 1);
        let (u, value) = inserted[0];
        assert_eq!(u, 0.5);
        assert!((value - 0.475).abs() < 1e-12);
        assert!((0.5f64 - value).abs() <= 0.025 + 1e-12);
        assert!(state.known[0].contains_value(0.5));
    }

    #[test]
    fn update_tax_clips_to_known_bracket() {
        let mut state = init_designer(1, 0.5, 1.0).unwrap();
        // Slope estimate 10 would put 5.0 at u = 0.5; the bracket is
        // [τ̂(0), τ̂(1)] = [0, 1].
        let inserted = update_tax(&mut state, 0, 0.5, 0.5, 0.4, 1.0, 0.0).unwrap();
        assert_eq!(inserted[0].1, 1.0);
    }

    #[test]
    fn update_tax_inserts_both_neighbors_off_grid() {
        let mut state = init_designer(1, 0.5, 1.0).unwrap();
        let inserted = update_tax(&mut state, 0, 0.3, 0.3, 0.25, 0.09, 0.0625).unwrap();
        let points: Vec<f64> = inserted.iter().map(|(u, _)| *u).collect();
        assert_eq!(points, vec![0.25, 0.5]);
        assert_eq!(state.known[0].len(), 3);
    }

    #[test]
    fn single_action_game_terminates_first_round() {
        let g = GameInstance::new(
            vec![CostFunction::Constant(0.4)],
            vec![Commodity::explicit(1.0, vec![vec![0]])],
            None,
        )
        .unwrap();
        let mut oracle = SimulatedOracle::new(&g, SolverConfig::default());
        let result = run(&g, &mut oracle, 0.5, 1.0, &RunConfig::default()).unwrap();
        assert_eq!(result.termination, Termination::SubroutineFalse);
        assert_eq!(result.rounds, 1);
        assert_eq!(result.equilibrium_queries, 1);
    }

    #[test]
    fn constant_cost_game_learns_zero_tax() {
        let g = GameInstance::new(
            vec![CostFunction::Constant(0.3), CostFunction::Constant(0.3)],
            vec![Commodity::explicit(1.0, vec![vec![0], vec![1]])],
            None,
        )
        .unwrap();
        let eps = 0.25;
        let cfg = SolverConfig {
            tol_eq: recommended_tol_eq(eps, 1.0),
            ..SolverConfig::default()
        };
        let mut oracle = SimulatedOracle::new(&g, cfg);
        let result = run(&g, &mut oracle, eps, 1.0, &RunConfig::default()).unwrap();
        assert_eq!(result.termination, Termination::SubroutineFalse);
        // The true cost slope is zero, so every learned base value is zero
        // up to the clip bracket.
        for f in 0..2 {
            for &(u, _) in result.plan.hat(f).points() {
                if u < 1.0 {
                    let value = result.plan.hat(f).eval(u).unwrap();
                    assert!(value.abs() <= eps + 1e-9, "hat({u}) = {value}");
                }
            }
        }
    }

    struct FrozenOracle {
        game: GameInstance,
    }

    impl EquilibriumOracle for FrozenOracle {
        fn observe(
            &mut self,
            _taxes: &[PiecewiseLinear],
        ) -> Result<EquilibriumFeedback, SolverError> {
            let load = vec![0.55, 0.45];
            let strategy = Strategy {
                per_commodity: vec![CommodityWeights::Explicit(vec![0.55, 0.45])],
            };
            Ok(EquilibriumFeedback {
                cost: self.game.cost_vector(&load),
                per_commodity_load: vec![load.clone()],
                load,
                strategy,
                certified_eps: 0.0,
                fw_gap: 0.0,
                potential: 0.0,
                iterations: 0,
            })
        }
    }

    #[test]
    fn frozen_equilibrium_triggers_degenerate_error_after_retry() {
        let g = GameInstance::new(
            vec![CostFunction::Constant(0.3), CostFunction::Constant(0.3)],
            vec![Commodity::explicit(1.0, vec![vec![0], vec![1]])],
            None,
        )
        .unwrap();
        let mut oracle = FrozenOracle { game: g.clone() };
        let err = run(&g, &mut oracle, 0.5, 1.0, &RunConfig::default()).unwrap_err();
        assert!(matches!(err, RunError::DegeneratePerturbation { .. }));
    }
}
