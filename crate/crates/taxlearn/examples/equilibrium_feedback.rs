//! The feedback loop from the designer's point of view: deploy a tax,
//! observe only the Nash load and Nash cost. Shows how the equilibrium of
//! a small game responds to no tax, an ε-slope tax, and the marginal-cost
//! tax.
//!
//! ```bash
//! cargo run -p taxlearn --example equilibrium_feedback
//! ```

use taxlearn::equilibrium::{solve_equilibrium, tax_refs, zero_taxes, SolverConfig};
use taxlearn::game::{
    self, marginal_cost_tax, Commodity, CostFunction, GameInstance, LinearTax,
};

fn main() {
    // Two commodities share three facilities; one action bundles two of
    // them.
    let game = GameInstance::new(
        vec![
            CostFunction::Monomial { scale: 0.7, power: 2 },
            CostFunction::Affine { intercept: 0.1, slope: 0.4 },
            CostFunction::Constant(0.3),
        ],
        vec![
            Commodity::explicit(0.6, vec![vec![0], vec![1, 2]]),
            Commodity::explicit(0.4, vec![vec![1], vec![2]]),
        ],
        None,
    )
    .expect("valid game");
    let cfg = SolverConfig::default();

    let zeros = zero_taxes(game.facility_count());
    let untaxed = solve_equilibrium(&game, &tax_refs(&zeros), &cfg).expect("solve");
    report("no tax", &game, &untaxed.load, untaxed.certified_eps);

    let slope = vec![LinearTax { slope: 0.05 }; game.facility_count()];
    let sloped = solve_equilibrium(&game, &tax_refs(&slope), &cfg).expect("solve");
    report("ε-slope tax (unique equilibrium)", &game, &sloped.load, sloped.certified_eps);

    let marginal: Vec<_> = game.costs().iter().map(marginal_cost_tax).collect();
    let optimal = solve_equilibrium(&game, &tax_refs(&marginal), &cfg).expect("solve");
    report("marginal-cost tax (optimal)", &game, &optimal.load, optimal.certified_eps);

    println!(
        "social cost: untaxed {:.6} → marginal-cost taxed {:.6}",
        game::social_cost(&game, &untaxed.load).unwrap(),
        game::social_cost(&game, &optimal.load).unwrap(),
    );
}

fn report(label: &str, game: &GameInstance, load: &[f64], certified: f64) {
    let cost = game.cost_vector(load);
    println!("{label}:");
    println!("  load {load:.4?}");
    println!("  cost {cost:.4?}  (certified ε = {certified:.2e})\n");
}
