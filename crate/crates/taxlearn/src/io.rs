//! File formats: game/network description JSON, CSV emission helpers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{CostFunction, GameError, GameInstance};
use crate::netgame::{NetError, Network};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("game: {0}")]
    Game(#[from] GameError),
    #[error("network: {0}")]
    Net(#[from] NetError),
}

/// Format a float with 12 significant digits, `.` decimal separator.
/// Scientific notation keeps trace files compact and diff-friendly.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if v.is_nan() {
        return "nan".to_string();
    }
    format!("{v:.11e}")
}

/// Cost descriptor used by both game and network files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostSpec {
    Constant { value: f64 },
    Affine { intercept: f64, slope: f64 },
    Polynomial { coefficients: Vec<f64> },
    Monomial { scale: f64, power: u32 },
}

impl From<CostSpec> for CostFunction {
    fn from(spec: CostSpec) -> Self {
        match spec {
            CostSpec::Constant { value } => CostFunction::Constant(value),
            CostSpec::Affine { intercept, slope } => CostFunction::Affine { intercept, slope },
            CostSpec::Polynomial { coefficients } => CostFunction::Polynomial(coefficients),
            CostSpec::Monomial { scale, power } => CostFunction::Monomial { scale, power },
        }
    }
}

impl From<&CostFunction> for CostSpec {
    fn from(cf: &CostFunction) -> Self {
        match cf {
            CostFunction::Constant(value) => CostSpec::Constant { value: *value },
            CostFunction::Affine { intercept, slope } => CostSpec::Affine {
                intercept: *intercept,
                slope: *slope,
            },
            CostFunction::Polynomial(coefficients) => CostSpec::Polynomial {
                coefficients: coefficients.clone(),
            },
            CostFunction::Monomial { scale, power } => CostSpec::Monomial {
                scale: *scale,
                power: *power,
            },
        }
    }
}

/// Explicit-action game file: facility count, per-facility costs, and
/// commodities given as weights plus facility-index action lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    pub facilities: usize,
    pub costs: Vec<CostSpec>,
    pub commodities: Vec<CommoditySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommoditySpec {
    pub weight: f64,
    pub actions: Vec<Vec<usize>>,
}

/// Network game file: vertex count, edges with cost descriptors, and
/// source/target/weight commodities routed over all simple paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub vertices: usize,
    pub edges: Vec<EdgeSpec>,
    pub commodities: Vec<RouteSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    pub cost: CostSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteSpec {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

pub fn load_game(path: &Path) -> Result<GameInstance, IoError> {
    let text = fs::read_to_string(path)?;
    let file: GameFile = serde_json::from_str(&text)?;
    Ok(game_from_file(file)?)
}

pub fn game_from_file(file: GameFile) -> Result<GameInstance, GameError> {
    let costs: Vec<CostFunction> = file.costs.into_iter().map(CostFunction::from).collect();
    if costs.len() != file.facilities {
        return Err(GameError::Shape(format!(
            "{} cost descriptors for {} facilities",
            costs.len(),
            file.facilities
        )));
    }
    let commodities = file
        .commodities
        .into_iter()
        .map(|c| crate::game::Commodity::explicit(c.weight, c.actions))
        .collect();
    GameInstance::new(costs, commodities, None)
}

pub fn load_network_game(path: &Path) -> Result<GameInstance, IoError> {
    let text = fs::read_to_string(path)?;
    let file: NetworkFile = serde_json::from_str(&text)?;
    network_game_from_file(file)
}

pub fn network_game_from_file(file: NetworkFile) -> Result<GameInstance, IoError> {
    let network = Network::new(
        file.vertices,
        file.edges.iter().map(|e| (e.from, e.to)).collect(),
    )?;
    let costs: Vec<CostFunction> = file
        .edges
        .into_iter()
        .map(|e| CostFunction::from(e.cost))
        .collect();
    let commodities = file
        .commodities
        .into_iter()
        .map(|r| crate::game::Commodity::route(r.weight, r.source, r.target))
        .collect();
    Ok(GameInstance::new(costs, commodities, Some(network))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_sig_has_12_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1.00000000000e0");
        assert_eq!(fmt_sig(0.2), "2.00000000000e-1");
        assert_eq!(fmt_sig(-1.5e-7), "-1.50000000000e-7");
    }

    #[test]
    fn game_file_roundtrip() {
        let json = r#"{
            "facilities": 2,
            "costs": [
                {"kind": "constant", "value": 0.2},
                {"kind": "monomial", "scale": 1.0, "power": 2}
            ],
            "commodities": [
                {"weight": 1.0, "actions": [[0], [1]]}
            ]
        }"#;
        let file: GameFile = serde_json::from_str(json).unwrap();
        let game = game_from_file(file).unwrap();
        assert_eq!(game.facility_count(), 2);
        assert_eq!(game.commodity_count(), 1);
    }

    #[test]
    fn network_file_roundtrip() {
        let json = r#"{
            "vertices": 2,
            "edges": [
                {"from": 0, "to": 1, "cost": {"kind": "constant", "value": 0.2}},
                {"from": 0, "to": 1, "cost": {"kind": "monomial", "scale": 1.0, "power": 2}}
            ],
            "commodities": [
                {"source": 0, "target": 1, "weight": 1.0}
            ]
        }"#;
        let file: NetworkFile = serde_json::from_str(json).unwrap();
        let game = network_game_from_file(file).unwrap();
        assert_eq!(game.facility_count(), 2);
        assert!(game.network().is_some());
    }
}
