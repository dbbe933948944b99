//! Shared fixtures for the benchmarks in `benches/`.

use std::path::Path;

use remedibench::{parse_scenario, ScenarioConfig};

/// Loads one of the scenarios shipped in the workspace `scenarios/` folder.
pub fn shipped(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    parse_scenario(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Deterministic SLI values hovering around `1.0`, about a third above it.
pub fn wavy_series(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 1.0 + 0.4 * ((i as f64) * 0.37).sin() - 0.1)
        .collect()
}
