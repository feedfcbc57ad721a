//! Learn the optimal tax for the nonlinear Pigou routing game from
//! equilibrium feedback only, then compare the learned tax against the
//! marginal-cost tax at the points the learner certified.
//!
//! ```bash
//! cargo run -p taxlearn --example pigou_learning
//! ```

use taxlearn::equilibrium::{SimulatedOracle, SolverConfig};
use taxlearn::experiment;
use taxlearn::game::{marginal_cost_tax, TaxFunction};
use taxlearn::oracles;
use taxlearn::taxdesign::{self, RunConfig, Termination};

fn main() {
    let (c, p) = (0.2, 2u32);
    let eps = 0.05;
    let beta = f64::from(p * (p - 1)); // exact smoothness of u^p on [0,1]

    let game = experiment::pigou_network(c, p).expect("valid pigou instance");
    let reference = oracles::pigou_analytic(c, p);
    println!("nonlinear Pigou: constant arm c = {c}, polynomial arm u^{p}");
    println!(
        "untaxed equilibrium social cost {:.6}, optimum {:.6}\n",
        reference.equilibrium_social_cost, reference.optimal_social_cost
    );

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
    let result = taxdesign::run(&game, &mut oracle, eps, beta, &cfg).expect("learning run");

    println!("round  social_cost   gap_to_optimum");
    for record in &result.trace {
        println!(
            "{:>5}  {:>11.6}  {:>13.2e}",
            record.round,
            record.social_cost,
            record.social_cost - reference.optimal_social_cost
        );
    }
    match result.termination {
        Termination::SubroutineFalse => println!(
            "\ncertified after {} rounds ({} equilibrium queries)",
            result.rounds, result.equilibrium_queries
        ),
        Termination::RoundBudgetExhausted => println!("\nround budget exhausted"),
    }

    println!("\nlearned tax vs the (hidden) marginal-cost tax on the polynomial arm:");
    println!("    u    learned   u*c'(u)");
    let truth = marginal_cost_tax(game.cost(1));
    for &(u, _) in result.plan.hat(1).points() {
        let learned = result.plan.applied_value(1, u);
        println!("{u:>6.4}  {learned:>8.4}  {:>8.4}", truth.value(u));
    }
    println!("(accuracy is only needed near the induced equilibrium load)");
}
