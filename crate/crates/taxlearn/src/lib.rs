//! Learning congestion taxes from equilibrium feedback.
//!
//! This library designs marginal-cost taxes for nonatomic congestion games
//! when the cost functions are unknown and the only observable is the Nash
//! equilibrium induced by a deployed tax plan: after each tax realization the
//! designer sees the equilibrium facility loads and the (untaxed) facility
//! costs at those loads, nothing else.
//!
//! The main entry point is [`taxdesign::run`], which drives the learning
//! loop: it maintains a monotone piece-wise linear tax per facility plus a
//! strongly-convexifying linear term, probes the game with carefully chosen
//! "boundary" taxes found by [`explore::find_exploratory_tax`], and estimates
//! the cost slope at grid points from pairs of nearby equilibria.
//!
//! Module map:
//!
//! - [`pwl`]: piece-wise linear functions on `[0, 1]`, grids, known-index sets
//! - [`game`]: the congestion-game model, potential and social cost, taxes
//! - [`netgame`]: network (selfish-routing) games and shortest-path machinery
//! - [`equilibrium`]: the Frank-Wolfe equilibrium solver / feedback oracle
//! - [`explore`]: the exploratory-tax subroutine and flow decomposition
//! - [`taxdesign`]: the main learning loop
//! - [`oracles`]: brute-force and analytic references used for validation
//! - [`validate`]: named invariant checks runnable on any game instance
//! - [`experiment`]: experiment configs, file formats and report emission

pub mod equilibrium;
pub mod experiment;
pub mod explore;
pub mod game;
pub mod io;
pub mod netgame;
pub mod oracles;
pub mod pwl;
mod simplex;
pub mod taxdesign;
pub mod validate;

pub use game::{CostFunction, GameInstance, Strategy};
pub use pwl::{Grid, PiecewiseLinear};
pub use taxdesign::{RunConfig, RunResult, TaxPlan};
