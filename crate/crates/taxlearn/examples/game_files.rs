//! The JSON file formats for explicit-action and network games, plus the
//! named invariant suite that `taxlearn validate` runs against a loaded
//! instance.
//!
//! ```bash
//! cargo run -p taxlearn --example game_files
//! ```

use std::fs;

use taxlearn::io;
use taxlearn::validate;

fn main() {
    let dir = std::env::temp_dir().join("taxlearn_game_files");
    fs::create_dir_all(&dir).expect("temp dir");

    let game_json = r#"{
  "facilities": 3,
  "costs": [
    {"kind": "monomial", "scale": 0.8, "power": 2},
    {"kind": "affine", "intercept": 0.1, "slope": 0.4},
    {"kind": "constant", "value": 0.3}
  ],
  "commodities": [
    {"weight": 0.7, "actions": [[0], [1, 2]]},
    {"weight": 0.3, "actions": [[1], [2]]}
  ]
}"#;
    let game_path = dir.join("bundled.json");
    fs::write(&game_path, game_json).expect("write");
    let game = io::load_game(&game_path).expect("well-formed game file");
    println!(
        "loaded explicit game: {} facilities, {} commodities",
        game.facility_count(),
        game.commodity_count()
    );

    let network_json = r#"{
  "vertices": 2,
  "edges": [
    {"from": 0, "to": 1, "cost": {"kind": "constant", "value": 0.2}},
    {"from": 0, "to": 1, "cost": {"kind": "monomial", "scale": 1.0, "power": 2}}
  ],
  "commodities": [
    {"source": 0, "target": 1, "weight": 1.0}
  ]
}"#;
    let network_path = dir.join("pigou.json");
    fs::write(&network_path, network_json).expect("write");
    let pigou = io::load_network_game(&network_path).expect("well-formed network file");
    println!(
        "loaded network game: {} edges over {} vertices\n",
        pigou.facility_count(),
        pigou.network().map_or(0, |n| n.vertex_count())
    );

    println!("invariant suite on the explicit game:");
    for check in validate::run_checks(&game, 7) {
        let status = if check.passed { "pass" } else { "FAIL" };
        println!("  {status} {}: {}", check.name, check.detail);
    }

    // The loader rejects games that break the cost assumptions.
    let bad = r#"{
  "facilities": 1,
  "costs": [{"kind": "affine", "intercept": 0.9, "slope": -0.5}],
  "commodities": [{"weight": 1.0, "actions": [[0]]}]
}"#;
    let bad_path = dir.join("decreasing.json");
    fs::write(&bad_path, bad).expect("write");
    match io::load_game(&bad_path) {
        Err(e) => println!("\ndecreasing cost rejected as expected: {e}"),
        Ok(_) => println!("\nunexpectedly accepted a decreasing cost"),
    }
}
