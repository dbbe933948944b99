#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use remedibench::simcore::{ConservationLedger, SimFault, SimTime, TickHandler, World};
use remedibench::{parse_scenario, ScenarioConfig};
use serde_json::{json, Value};

pub fn shipped(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    parse_scenario(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn cpu_stress() -> ScenarioConfig {
    shipped("paper-cpu-stress.json")
}

pub fn network_latency() -> ScenarioConfig {
    shipped("paper-network-latency.json")
}

/// A small valid scenario drawn from `seed`: 1-3 edge zones around a cloud,
/// optional chaos and a random remediator block.
pub fn random_doc(seed: u64) -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = rng.random_range(1..=3usize);
    let mut zones: Vec<String> = (0..edges).map(|i| format!("edge-{i}")).collect();
    zones.push("cloud".into());

    let mut nodes = Vec::new();
    let mut workers = Vec::new();
    let mut links = Vec::new();
    let mut producers = Vec::new();
    for (i, z) in zones.iter().enumerate() {
        let cloud = i == edges;
        let idle = rng.random_range(1.0..50.0f64);
        nodes.push(json!({
            "id": format!("{z}-n"),
            "zone": z,
            "role": if cloud { "cloud" } else { "edge" },
            "cpu_cores": if cloud { rng.random_range(2..=16) } else { rng.random_range(1..=4) },
            "idle_power_w": idle,
            "max_power_w": idle + rng.random_range(0.0..100.0f64),
        }));
        workers.push(json!({
            "id": format!("{z}-w"),
            "node": format!("{z}-n"),
            "model": if rng.random_bool(0.5) { "deep" } else { "shallow" },
            "replicas": rng.random_range(1..=3),
        }));
        if !cloud {
            links.push(json!({
                "a": z, "b": "cloud",
                "latency_ms": rng.random_range(0.0..200.0f64),
                "bandwidth_mbps": rng.random_range(1.0..1000.0f64),
            }));
            producers.push(json!({
                "zone": z,
                "rate_per_s": rng.random_range(0.2..8.0f64),
                "message_size_kb": rng.random_range(0.0..500.0f64),
            }));
        }
    }

    let shallow_ms = rng.random_range(10.0..400.0f64);
    let shallow_acc = rng.random_range(0.5..0.9f64);
    let mut chaos = Vec::new();
    if rng.random_bool(0.7) {
        let duration = if rng.random_bool(0.5) {
            json!(rng.random_range(0.5..10.0f64))
        } else {
            json!("until-teardown")
        };
        if rng.random_bool(0.5) {
            chaos.push(json!({
                "kind": "cpu_stress",
                "targets": [format!("edge-{}-n", rng.random_range(0..edges))],
                "threads": rng.random_range(1..=12),
                "start_offset_s": rng.random_range(0.0..5.0f64),
                "duration_s": duration,
            }));
        } else {
            chaos.push(json!({
                "kind": "network_delay",
                "targets": [[format!("edge-{}", rng.random_range(0..edges)), "cloud"]],
                "new_latency_ms": rng.random_range(0.0..1000.0f64),
                "start_offset_s": rng.random_range(0.0..5.0f64),
                "duration_s": duration,
            }));
        }
    }

    let mut action = || {
        let worker = format!("{}-w", zones[rng.random_range(0..zones.len())]);
        match rng.random_range(0..3) {
            0 => json!({"type": "reschedule", "worker": worker,
                        "node": format!("{}-n", zones[rng.random_range(0..zones.len())])}),
            1 => json!({"type": "set_model", "worker": worker,
                        "model": if rng.random_bool(0.5) { "deep" } else { "shallow" }}),
            _ => {
                let delta = [-1, 1, 2][rng.random_range(0..3)];
                json!({"type": "scale", "worker": worker, "delta": delta})
            }
        }
    };
    let remediator = match seed % 3 {
        0 => json!({"name": "noop"}),
        1 => {
            let entries: Vec<Value> = (0..3)
                .map(|i| {
                    let mut a = action();
                    a["at_s"] = json!(i as f64 * 2.5);
                    a
                })
                .collect();
            json!({"name": "scripted", "params": entries})
        }
        _ => json!({"name": "threshold", "params": {"rules": [
            {"slo": "latency", "consecutive": 2, "actions": [action()]}
        ]}}),
    };

    let sample_ms = [250, 500, 1000][(seed % 3) as usize];
    json!({
        "seed": seed,
        "sample_interval_ms": sample_ms,
        "phases": {
            "warmup_s": rng.random_range(0.5..3.0f64),
            "evaluation_s": rng.random_range(4.0..15.0f64),
            "teardown_s": rng.random_range(0.5..3.0f64),
        },
        "system": {
            "model_profiles": [
                {"name": "shallow", "hidden_layers": 50, "base_service_time_ms": shallow_ms,
                 "accuracy": shallow_acc, "energy_per_inference_j": 1.0},
                {"name": "deep", "hidden_layers": 152,
                 "base_service_time_ms": shallow_ms * rng.random_range(1.0..3.0f64),
                 "accuracy": shallow_acc + rng.random_range(0.0..0.1f64),
                 "energy_per_inference_j": 3.0}
            ],
            "workers": workers,
            "worker_startup_delay_s": rng.random_range(0.0..4.0f64),
        },
        "infrastructure": {"zones": zones, "nodes": nodes, "links": links},
        "data": {"producers": producers, "staleness_deadline_ms": rng.random_range(300.0..5000.0f64)},
        "chaos": chaos,
        "slos": [
            {"name": "latency", "sli": "event_time_latency", "threshold": rng.random_range(0.2..3.0f64),
             "weight": 0.5, "window_s": 2},
            {"name": "accuracy", "sli": "accuracy", "threshold": 0.75, "weight": 0.25, "window_s": 3},
            {"name": "energy", "sli": "energy_per_task", "threshold": rng.random_range(1.0..100.0f64),
             "weight": 0.25, "window_s": 3}
        ],
        "remediator": remediator,
    })
}

pub fn random_scenario(seed: u64) -> ScenarioConfig {
    let doc = random_doc(seed);
    parse_scenario(&doc.to_string()).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{doc:#}"))
}

/// Records the conservation ledger at every sample tick.
#[derive(Default)]
pub struct LedgerProbe {
    pub ticks: Vec<(SimTime, ConservationLedger)>,
}

impl TickHandler for LedgerProbe {
    fn on_sample_tick(&mut self, world: &World, t: SimTime) -> Result<(), SimFault> {
        self.ticks.push((t, world.state.conservation()));
        Ok(())
    }
}

/// Independent reading of the violation score: per-sample loop, no helpers
/// from the crate under test.
pub fn oracle_score(values: &[f64], threshold: f64) -> f64 {
    let mut total = 0.0;
    for &v in values {
        if v > threshold {
            total += (v - threshold) / v;
        }
    }
    total / values.len() as f64
}
