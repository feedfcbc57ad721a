//! Network (selfish-routing) games: shortest-path primitives with
//! deterministic tie-breaking, the avoid-edge and through-edge variants
//! used by the fast gap computations, equilibrium routing, and flow
//! decomposition.
//!
//! ```bash
//! cargo run -p taxlearn --example network_routing
//! ```

use taxlearn::equilibrium::{solve_equilibrium, tax_refs, zero_taxes, SolverConfig};
use taxlearn::game::{Commodity, CostFunction, GameInstance};
use taxlearn::netgame::{
    flow_decompose, shortest_path, shortest_path_avoiding_edge, shortest_path_through_edge,
    Network,
};

fn main() {
    // Braess-style diamond: s=0, a=1, b=2, t=3, plus a shortcut a→b.
    //   edges: 0: s→a, 1: a→t, 2: s→b, 3: b→t, 4: a→b
    let net = Network::new(4, vec![(0, 1), (1, 3), (0, 2), (2, 3), (1, 2)]).expect("valid");
    let weights = [0.15, 0.4, 0.4, 0.15, 0.05];

    let (path, len) = shortest_path(&net, &weights, 0, 3).expect("connected");
    println!("shortest s→t path: edges {path:?}, length {len:.2}");
    for edge in 0..net.edge_count() {
        let avoided = shortest_path_avoiding_edge(&net, &weights, 0, 3, edge).unwrap();
        let through = shortest_path_through_edge(&net, &weights, 0, 3, edge).unwrap();
        println!("  edge {edge}: best detour avoiding it {avoided:.2}, best route through it {through:.2}");
    }

    // The same diamond as a congestion game with load-dependent costs.
    let game = GameInstance::new(
        vec![
            CostFunction::Monomial { scale: 0.9, power: 1 }, // s→a congests
            CostFunction::Constant(0.4),
            CostFunction::Constant(0.4),
            CostFunction::Monomial { scale: 0.9, power: 1 }, // b→t congests
            CostFunction::Constant(0.05),                    // cheap shortcut
        ],
        vec![Commodity::route(1.0, 0, 3)],
        Some(net.clone()),
    )
    .expect("valid game");
    let zeros = zero_taxes(game.facility_count());
    let feedback =
        solve_equilibrium(&game, &tax_refs(&zeros), &SolverConfig::default()).expect("solve");
    println!("\nequilibrium edge loads: {:.4?}", feedback.load);

    let parts = flow_decompose(&net, 0, 3, &feedback.per_commodity_load[0]).expect("decompose");
    println!("decomposed into {} weighted paths:", parts.len());
    for (edges, weight) in &parts {
        println!("  {weight:.4} on edges {edges:?}");
    }
}
