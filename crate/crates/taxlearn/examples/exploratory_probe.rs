//! One call to the exploratory-tax subroutine, dissected: decompose the
//! observed load into a strategy, split facilities by how the commodity
//! uses them, test the per-commodity worst-case tax, and sweep to the
//! boundary where the equilibrium is about to change.
//!
//! ```bash
//! cargo run -p taxlearn --example exploratory_probe
//! ```

use taxlearn::explore::{decompose, find_exploratory_tax_logged, ExploreOutcome};
use taxlearn::game::{Commodity, CostFunction, GameInstance};

fn main() {
    // One commodity, two parallel facilities; all load currently sits on
    // facility 0, whose tax the designer still knows nothing about.
    let game = GameInstance::new(
        vec![CostFunction::Constant(0.3), CostFunction::Constant(0.5)],
        vec![Commodity::explicit(1.0, vec![vec![0], vec![1]])],
        None,
    )
    .expect("valid game");

    let load = [1.0, 0.0];
    let cost = [0.3, 0.5]; // observed Nash cost
    let tau = [0.1, 0.2]; // applied tax values at the observed loads
    let unknown = [true, false];
    let ranges = [Some((0.03, 1.03)), None]; // feasible re-anchoring range

    let x = decompose(&game, &load).expect("the load is feasible");
    println!("observed load {load:?} decomposes into strategy {x:?}\n");

    let (outcome, log) =
        find_exploratory_tax_logged(&game, &x, &cost, &tau, &unknown, &ranges)
            .expect("subroutine succeeds");
    println!("branch taken: {}", log.branch);
    if let Some(i) = log.commodity {
        println!("triggering commodity: {i}");
    }
    for (facility, boundary) in &log.swept {
        println!("swept facility {facility}: boundary tax value {boundary:.4}");
    }
    match outcome {
        ExploreOutcome::Probe { tax, facility, sign } => {
            println!("\nprobe: set taxes to {tax:?}, then nudge facility {facility} by sign {sign:+}·δ");
            println!("at the boundary both actions cost exactly {:.2}; the δ-nudge", cost[0] + tax[0]);
            println!("flips the comparison and moves the equilibrium, revealing the cost slope");
        }
        ExploreOutcome::Certified => {
            println!("\ncertified: every feasible tax keeps the current equilibrium");
        }
    }
}
