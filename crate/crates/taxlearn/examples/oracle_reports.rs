//! The brute-force and analytic references: closed-form Pigou solutions
//! cross-checked against grid search, equilibrium by enumeration, and the
//! price-of-anarchy diagnostic.
//!
//! ```bash
//! cargo run -p taxlearn --example oracle_reports
//! ```

use taxlearn::equilibrium::SolverConfig;
use taxlearn::experiment;
use taxlearn::oracles;

fn main() {
    println!("analytic Pigou solutions (c, p) → (y_ne, y*, Ψ_ne, Ψ*):");
    for &(c, p) in &[(0.2, 2u32), (0.6, 2), (0.6, 4), (1.0, 2)] {
        let s = oracles::pigou_analytic(c, p);
        println!(
            "  ({c}, {p}) → ({:.6}, {:.6}, {:.6}, {:.6})",
            s.equilibrium_load, s.optimal_load, s.equilibrium_social_cost, s.optimal_social_cost
        );
    }

    let game = experiment::pigou_explicit(0.2, 2).expect("valid");
    let report = oracles::optimal_social_cost(&game).expect("small game");
    println!(
        "\ngrid search ({:?}) puts the optimal social cost at {:.6} (resolution {:.0e})",
        report.method, report.value, report.resolution
    );

    let load = oracles::equilibrium_by_enumeration(&game, None).expect("small game");
    println!("equilibrium by enumeration: load {load:.6?}");

    let poa = oracles::price_of_anarchy(&game, &SolverConfig::default()).expect("defined");
    println!(
        "\nprice of anarchy: {:.4} (equilibrium {:.6} / optimal {:.6})",
        poa.price_of_anarchy, poa.equilibrium_social_cost, poa.optimal_social_cost
    );
    println!("note: {}", poa.caveat);
}
