//! Declarative scenario documents.
//!
//! A scenario file is a JSON object with four blueprint sections (`system`,
//! `infrastructure`, `data`, `chaos`) plus the SLO list, the phase plan and an
//! optional remediator block. [`parse_scenario`] turns the document into a
//! validated [`ScenarioConfig`]; every failure carries a path to the offending
//! field. After parsing, every duration is held in milliseconds.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Default SLI sampling period.
pub const DEFAULT_SAMPLE_INTERVAL_MS: f64 = 1_000.0;
/// Default delay before a freshly scheduled worker accepts messages.
pub const DEFAULT_STARTUP_DELAY_MS: f64 = 5_000.0;
/// Default one-way transit inside a zone.
pub const DEFAULT_INTRA_ZONE_LATENCY_MS: f64 = 1.0;
/// Default period between remediator invocations.
pub const DEFAULT_REMEDIATOR_PERIOD_MS: f64 = 5_000.0;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("reference error at `{path}`: {message}")]
    Reference { path: String, message: String },
    #[error("constraint error at `{path}`: {message}")]
    Constraint { path: String, message: String },
}

impl ConfigError {
    /// Config path of the offending field, e.g. `slos[1].threshold`.
    pub fn path(&self) -> &str {
        match self {
            ConfigError::Schema { path, .. }
            | ConfigError::Reference { path, .. }
            | ConfigError::Constraint { path, .. } => path,
        }
    }

    fn reference(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Reference {
            path: path.into(),
            message: message.into(),
        }
    }

    fn constraint(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Constraint {
            path: path.into(),
            message: message.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Validated configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub sample_interval_ms: f64,
    pub phases: PhasePlan,
    pub system: SystemDef,
    pub infrastructure: InfraDef,
    pub data: DataDef,
    pub chaos: Vec<ChaosDef>,
    pub slos: Vec<SloSpec>,
    pub remediator: Option<RemediatorSpec>,
    /// Free-form annotations carried along for replication bookkeeping.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePlan {
    pub warmup_ms: f64,
    pub evaluation_ms: f64,
    pub teardown_ms: f64,
}

impl PhasePlan {
    pub fn evaluation_start_ms(&self) -> f64 {
        self.warmup_ms
    }

    pub fn evaluation_end_ms(&self) -> f64 {
        self.warmup_ms + self.evaluation_ms
    }

    pub fn total_ms(&self) -> f64 {
        self.warmup_ms + self.evaluation_ms + self.teardown_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DrainPolicy {
    #[serde(rename = "drop")]
    Drop,
    #[serde(rename = "finish-in-flight")]
    FinishInFlight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDef {
    pub workers: Vec<WorkerSpec>,
    pub model_profiles: Vec<ModelProfile>,
    pub broker_per_zone: bool,
    pub worker_startup_delay_ms: f64,
    pub drain_policy: DrainPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerSpec {
    pub id: String,
    pub node: String,
    pub model: String,
    pub replicas: u32,
    /// Accepted and recorded; memory has no effect on the simulation.
    pub memory_limit_mb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelProfile {
    pub name: String,
    pub hidden_layers: u32,
    /// Service time on one dedicated core.
    pub base_service_time_ms: f64,
    pub accuracy: f64,
    pub energy_per_inference_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Edge,
    Cloud,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfraDef {
    pub zones: Vec<String>,
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    pub intra_zone_latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: String,
    pub zone: String,
    pub role: NodeRole,
    pub cpu_cores: f64,
    pub idle_power_w: f64,
    pub max_power_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    /// One-way latency.
    pub latency_ms: f64,
    pub bandwidth_mbps: f64,
}

impl LinkSpec {
    pub fn connects(&self, x: &str, y: &str) -> bool {
        (self.a == x && self.b == y) || (self.a == y && self.b == x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataDef {
    pub producers: Vec<ProducerSpec>,
    pub staleness_deadline_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProducerSpec {
    pub zone: String,
    pub rate_per_s: f64,
    /// Message size in kilobits (`kb`); transit adds `size / bandwidth`.
    pub message_size_kb: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosDef {
    pub kind: ChaosKind,
    /// Offset from the start of the evaluation phase.
    pub start_offset_ms: f64,
    pub duration: ChaosDuration,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChaosKind {
    NetworkDelay {
        links: Vec<(String, String)>,
        new_latency_ms: f64,
    },
    CpuStress {
        nodes: Vec<String>,
        threads: u32,
    },
}

impl ChaosKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChaosKind::NetworkDelay { .. } => "network_delay",
            ChaosKind::CpuStress { .. } => "cpu_stress",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChaosDuration {
    Fixed {
        ms: f64,
    },
    /// Resolved to the end of the evaluation phase when scheduled.
    UntilTeardown,
}

impl ChaosDef {
    /// Window relative to simulation start, clipped to the evaluation phase.
    pub fn window_ms(&self, phases: &PhasePlan) -> (f64, f64) {
        let eval_end = phases.evaluation_end_ms();
        let start = (phases.evaluation_start_ms() + self.start_offset_ms).min(eval_end);
        let end = match self.duration {
            ChaosDuration::Fixed { ms } => (start + ms).min(eval_end),
            ChaosDuration::UntilTeardown => eval_end,
        };
        (start, end.max(start))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliKind {
    /// Mean completion minus production time, in seconds.
    EventTimeLatency,
    /// Fraction of results that were wrong or stale.
    ErrorRate,
    /// Joules of cluster energy per completed inference.
    EnergyPerTask,
}

impl SliKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SliKind::EventTimeLatency => "event_time_latency",
            SliKind::ErrorRate => "error_rate",
            SliKind::EnergyPerTask => "energy_per_task",
        }
    }
}

impl fmt::Display for SliKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An SLO whose SLI is oriented larger-is-worse.
#[derive(Debug, Clone, PartialEq)]
pub struct SloSpec {
    pub name: String,
    pub sli: SliKind,
    pub threshold: f64,
    pub weight: f64,
    pub window_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemediatorSpec {
    pub name: String,
    pub params: Value,
    pub period_ms: f64,
}

impl ScenarioConfig {
    pub fn weights(&self) -> Vec<f64> {
        self.slos.iter().map(|s| s.weight).collect()
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.infrastructure.nodes.iter().find(|n| n.id == id)
    }

    pub fn model(&self, name: &str) -> Option<&ModelProfile> {
        self.system.model_profiles.iter().find(|m| m.name == name)
    }

    pub fn link_between(&self, a: &str, b: &str) -> Option<&LinkSpec> {
        self.infrastructure.links.iter().find(|l| l.connects(a, b))
    }

    /// Zones hosting a message broker, in `infrastructure.zones` order.
    pub fn broker_zones(&self) -> Vec<String> {
        let producer_zones: BTreeSet<&str> = self
            .data
            .producers
            .iter()
            .map(|p| p.zone.as_str())
            .collect();
        if self.system.broker_per_zone {
            self.infrastructure
                .zones
                .iter()
                .filter(|z| producer_zones.contains(z.as_str()))
                .cloned()
                .collect()
        } else {
            self.data
                .producers
                .first()
                .map(|p| vec![p.zone.clone()])
                .unwrap_or_default()
        }
    }

    /// Brokers a worker placed in `zone` with `role` consumes from.
    pub fn subscriptions_for(&self, role: NodeRole, zone: &str) -> Vec<String> {
        let brokers = self.broker_zones();
        match role {
            NodeRole::Edge => brokers.into_iter().filter(|z| z == zone).collect(),
            NodeRole::Cloud => brokers,
        }
    }

    /// Canonical JSON document. `parse_scenario` of its text yields `self`.
    pub fn to_document(&self) -> Value {
        RawScenario::from(self).to_value()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scenario serializes")
    }
}

/// Stable content hash. SLO, worker and chaos order are significant.
pub fn scenario_digest(cfg: &ScenarioConfig) -> String {
    let canonical = serde_json::to_string(&cfg.to_document()).expect("scenario serializes");
    let hash = Sha256::digest(canonical.as_bytes());
    format!("sha256:{}", hex::encode(hash))
}

// ---------------------------------------------------------------------------
// Document schema
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_interval_ms: Option<f64>,
    phases: RawPhases,
    system: RawSystem,
    infrastructure: RawInfra,
    data: RawData,
    chaos: Vec<RawChaos>,
    slos: Vec<RawSlo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    remediator: Option<RawRemediator>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhases {
    warmup_s: f64,
    evaluation_s: f64,
    teardown_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    model_profiles: Vec<RawModel>,
    workers: Vec<RawWorker>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    worker_startup_delay_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    drain_policy: Option<DrainPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    broker_per_zone: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    hidden_layers: u32,
    base_service_time_ms: f64,
    accuracy: f64,
    energy_per_inference_j: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorker {
    id: String,
    node: String,
    model: String,
    replicas: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    memory_limit_mb: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInfra {
    zones: Vec<String>,
    nodes: Vec<RawNode>,
    links: Vec<RawLink>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intra_zone_latency_ms: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    zone: String,
    role: NodeRole,
    cpu_cores: f64,
    idle_power_w: f64,
    max_power_w: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    a: String,
    b: String,
    latency_ms: f64,
    bandwidth_mbps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    producers: Vec<RawProducer>,
    staleness_deadline_ms: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProducer {
    zone: String,
    rate_per_s: f64,
    message_size_kb: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawChaosKind {
    NetworkDelay,
    CpuStress,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawTarget {
    Node(String),
    Link([String; 2]),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawDuration {
    Seconds(f64),
    Sentinel(String),
}

const UNTIL_TEARDOWN: &str = "until-teardown";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChaos {
    kind: RawChaosKind,
    targets: Vec<RawTarget>,
    start_offset_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration_s: Option<RawDuration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    new_latency_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threads: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlo {
    name: String,
    sli: String,
    threshold: f64,
    weight: f64,
    window_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRemediator {
    name: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    period_s: Option<f64>,
}

fn s_to_ms(s: f64) -> f64 {
    s * 1000.0
}

fn ms_to_s(ms: f64) -> f64 {
    ms / 1000.0
}

impl RawScenario {
    fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("raw scenario serializes")
    }
}

impl From<&ScenarioConfig> for RawScenario {
    fn from(cfg: &ScenarioConfig) -> Self {
        RawScenario {
            seed: cfg.seed,
            sample_interval_ms: Some(cfg.sample_interval_ms),
            phases: RawPhases {
                warmup_s: ms_to_s(cfg.phases.warmup_ms),
                evaluation_s: ms_to_s(cfg.phases.evaluation_ms),
                teardown_s: ms_to_s(cfg.phases.teardown_ms),
            },
            system: RawSystem {
                model_profiles: cfg
                    .system
                    .model_profiles
                    .iter()
                    .map(|m| RawModel {
                        name: m.name.clone(),
                        hidden_layers: m.hidden_layers,
                        base_service_time_ms: m.base_service_time_ms,
                        accuracy: m.accuracy,
                        energy_per_inference_j: m.energy_per_inference_j,
                    })
                    .collect(),
                workers: cfg
                    .system
                    .workers
                    .iter()
                    .map(|w| RawWorker {
                        id: w.id.clone(),
                        node: w.node.clone(),
                        model: w.model.clone(),
                        replicas: w.replicas,
                        memory_limit_mb: w.memory_limit_mb,
                    })
                    .collect(),
                worker_startup_delay_s: Some(ms_to_s(cfg.system.worker_startup_delay_ms)),
                drain_policy: Some(cfg.system.drain_policy),
                broker_per_zone: Some(cfg.system.broker_per_zone),
            },
            infrastructure: RawInfra {
                zones: cfg.infrastructure.zones.clone(),
                nodes: cfg
                    .infrastructure
                    .nodes
                    .iter()
                    .map(|n| RawNode {
                        id: n.id.clone(),
                        zone: n.zone.clone(),
                        role: n.role,
                        cpu_cores: n.cpu_cores,
                        idle_power_w: n.idle_power_w,
                        max_power_w: n.max_power_w,
                    })
                    .collect(),
                links: cfg
                    .infrastructure
                    .links
                    .iter()
                    .map(|l| RawLink {
                        a: l.a.clone(),
                        b: l.b.clone(),
                        latency_ms: l.latency_ms,
                        bandwidth_mbps: l.bandwidth_mbps,
                    })
                    .collect(),
                intra_zone_latency_ms: Some(cfg.infrastructure.intra_zone_latency_ms),
            },
            data: RawData {
                producers: cfg
                    .data
                    .producers
                    .iter()
                    .map(|p| RawProducer {
                        zone: p.zone.clone(),
                        rate_per_s: p.rate_per_s,
                        message_size_kb: p.message_size_kb,
                    })
                    .collect(),
                staleness_deadline_ms: cfg.data.staleness_deadline_ms,
            },
            chaos: cfg.chaos.iter().map(RawChaos::from).collect(),
            slos: cfg
                .slos
                .iter()
                .map(|s| RawSlo {
                    name: s.name.clone(),
                    sli: s.sli.as_str().to_string(),
                    threshold: s.threshold,
                    weight: s.weight,
                    window_s: ms_to_s(s.window_ms),
                })
                .collect(),
            remediator: cfg.remediator.as_ref().map(|r| RawRemediator {
                name: r.name.clone(),
                params: r.params.clone(),
                period_s: Some(ms_to_s(r.period_ms)),
            }),
            notes: cfg.notes.clone(),
        }
    }
}

impl From<&ChaosDef> for RawChaos {
    fn from(def: &ChaosDef) -> Self {
        let duration_s = Some(match def.duration {
            ChaosDuration::Fixed { ms } => RawDuration::Seconds(ms_to_s(ms)),
            ChaosDuration::UntilTeardown => RawDuration::Sentinel(UNTIL_TEARDOWN.to_string()),
        });
        match &def.kind {
            ChaosKind::NetworkDelay {
                links,
                new_latency_ms,
            } => RawChaos {
                kind: RawChaosKind::NetworkDelay,
                targets: links
                    .iter()
                    .map(|(a, b)| RawTarget::Link([a.clone(), b.clone()]))
                    .collect(),
                start_offset_s: ms_to_s(def.start_offset_ms),
                duration_s,
                new_latency_ms: Some(*new_latency_ms),
                threads: None,
            },
            ChaosKind::CpuStress { nodes, threads } => RawChaos {
                kind: RawChaosKind::CpuStress,
                targets: nodes.iter().cloned().map(RawTarget::Node).collect(),
                start_offset_s: ms_to_s(def.start_offset_ms),
                duration_s,
                new_latency_ms: None,
                threads: Some(*threads),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing and validation
// ---------------------------------------------------------------------------

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Schema {
            path: if path == "." { "$".to_string() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    de.end().map_err(|e| ConfigError::Schema {
        path: "$".into(),
        message: e.to_string(),
    })?;
    Validator.build(raw)
}

/// Parse a standalone SLO list, either a bare array or an object with `slos`.
///
/// A full scenario document is accepted too; only its `slos` are read.
pub fn parse_slos(text: &str) -> Result<Vec<SloSpec>, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Schema {
        path: "$".into(),
        message: e.to_string(),
    })?;
    let list = match value {
        Value::Array(_) => value,
        Value::Object(mut map) => map.remove("slos").ok_or_else(|| ConfigError::Schema {
            path: "slos".into(),
            message: "missing field `slos`".into(),
        })?,
        _ => {
            return Err(ConfigError::Schema {
                path: "$".into(),
                message: "expected an array or an object with `slos`".into(),
            })
        }
    };
    let raw: Vec<RawSlo> =
        serde_path_to_error::deserialize(list).map_err(|e| ConfigError::Schema {
            path: format!("slos{}", e.path()).replace("slos.", "slos"),
            message: e.into_inner().to_string(),
        })?;
    validate_slos(raw)
}

fn finite(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::constraint(path, "must be a finite number"))
    }
}

fn positive(path: &str, v: f64) -> Result<f64, ConfigError> {
    if finite(path, v)? > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::constraint(
            path,
            format!("must be > 0, got {v}"),
        ))
    }
}

fn non_negative(path: &str, v: f64) -> Result<f64, ConfigError> {
    if finite(path, v)? >= 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::constraint(
            path,
            format!("must be >= 0, got {v}"),
        ))
    }
}

fn unique<'a>(path: &str, names: impl IntoIterator<Item = &'a str>) -> Result<(), ConfigError> {
    let mut seen = HashSet::new();
    for (i, name) in names.into_iter().enumerate() {
        if name.is_empty() {
            return Err(ConfigError::constraint(
                format!("{path}[{i}]"),
                "name must not be empty",
            ));
        }
        if !seen.insert(name) {
            return Err(ConfigError::constraint(
                format!("{path}[{i}]"),
                format!("duplicate name `{name}`"),
            ));
        }
    }
    Ok(())
}

#[derive(Default)]
struct Validator;

impl Validator {
    fn build(self, raw: RawScenario) -> Result<ScenarioConfig, ConfigError> {
        let sample_interval_ms = positive(
            "sample_interval_ms",
            raw.sample_interval_ms.unwrap_or(DEFAULT_SAMPLE_INTERVAL_MS),
        )?;
        let phases = PhasePlan {
            warmup_ms: s_to_ms(positive("phases.warmup_s", raw.phases.warmup_s)?),
            evaluation_ms: s_to_ms(positive("phases.evaluation_s", raw.phases.evaluation_s)?),
            teardown_ms: s_to_ms(positive("phases.teardown_s", raw.phases.teardown_s)?),
        };

        let infrastructure = validate_infra(raw.infrastructure)?;
        let zones: HashSet<&str> = infrastructure.zones.iter().map(String::as_str).collect();
        let system = validate_system(raw.system, &infrastructure)?;
        let data = validate_data(raw.data, &zones)?;
        let chaos = raw
            .chaos
            .into_iter()
            .enumerate()
            .map(|(i, c)| validate_chaos(i, c, &infrastructure))
            .collect::<Result<Vec<_>, _>>()?;
        check_chaos_overlap(&chaos, &phases)?;
        let slos = validate_slos(raw.slos)?;
        let remediator = raw
            .remediator
            .map(|r| -> Result<RemediatorSpec, ConfigError> {
                if r.name.is_empty() {
                    return Err(ConfigError::constraint(
                        "remediator.name",
                        "must not be empty",
                    ));
                }
                Ok(RemediatorSpec {
                    name: r.name,
                    params: r.params,
                    period_ms: s_to_ms(positive(
                        "remediator.period_s",
                        r.period_s.unwrap_or(ms_to_s(DEFAULT_REMEDIATOR_PERIOD_MS)),
                    )?),
                })
            })
            .transpose()?;

        let cfg = ScenarioConfig {
            seed: raw.seed,
            sample_interval_ms,
            phases,
            system,
            infrastructure,
            data,
            chaos,
            slos,
            remediator,
            notes: raw.notes,
        };
        check_routes(&cfg)?;
        Ok(cfg)
    }
}

fn validate_infra(raw: RawInfra) -> Result<InfraDef, ConfigError> {
    if raw.zones.is_empty() {
        return Err(ConfigError::constraint(
            "infrastructure.zones",
            "at least one zone is required",
        ));
    }
    unique("infrastructure.zones", raw.zones.iter().map(String::as_str))?;
    unique(
        "infrastructure.nodes",
        raw.nodes.iter().map(|n| n.id.as_str()),
    )?;
    let zones: HashSet<&str> = raw.zones.iter().map(String::as_str).collect();

    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for (i, n) in raw.nodes.into_iter().enumerate() {
        let p = format!("infrastructure.nodes[{i}]");
        if !zones.contains(n.zone.as_str()) {
            return Err(ConfigError::reference(
                format!("{p}.zone"),
                format!("unknown zone `{}`", n.zone),
            ));
        }
        positive(&format!("{p}.cpu_cores"), n.cpu_cores)?;
        non_negative(&format!("{p}.idle_power_w"), n.idle_power_w)?;
        finite(&format!("{p}.max_power_w"), n.max_power_w)?;
        if n.max_power_w < n.idle_power_w {
            return Err(ConfigError::constraint(
                format!("{p}.max_power_w"),
                "max_power_w must be >= idle_power_w",
            ));
        }
        nodes.push(NodeSpec {
            id: n.id,
            zone: n.zone,
            role: n.role,
            cpu_cores: n.cpu_cores,
            idle_power_w: n.idle_power_w,
            max_power_w: n.max_power_w,
        });
    }

    let mut links: Vec<LinkSpec> = Vec::with_capacity(raw.links.len());
    for (i, l) in raw.links.into_iter().enumerate() {
        let p = format!("infrastructure.links[{i}]");
        for (field, zone) in [("a", &l.a), ("b", &l.b)] {
            if !zones.contains(zone.as_str()) {
                return Err(ConfigError::reference(
                    format!("{p}.{field}"),
                    format!("unknown zone `{zone}`"),
                ));
            }
        }
        if l.a == l.b {
            return Err(ConfigError::constraint(
                format!("{p}.b"),
                "a link must connect two distinct zones",
            ));
        }
        if links.iter().any(|other| other.connects(&l.a, &l.b)) {
            return Err(ConfigError::constraint(
                p,
                format!("duplicate link between `{}` and `{}`", l.a, l.b),
            ));
        }
        non_negative(&format!("{p}.latency_ms"), l.latency_ms)?;
        positive(&format!("{p}.bandwidth_mbps"), l.bandwidth_mbps)?;
        links.push(LinkSpec {
            a: l.a,
            b: l.b,
            latency_ms: l.latency_ms,
            bandwidth_mbps: l.bandwidth_mbps,
        });
    }

    let intra = non_negative(
        "infrastructure.intra_zone_latency_ms",
        raw.intra_zone_latency_ms
            .unwrap_or(DEFAULT_INTRA_ZONE_LATENCY_MS),
    )?;

    Ok(InfraDef {
        zones: raw.zones,
        nodes,
        links,
        intra_zone_latency_ms: intra,
    })
}

fn validate_system(raw: RawSystem, infra: &InfraDef) -> Result<SystemDef, ConfigError> {
    unique(
        "system.model_profiles",
        raw.model_profiles.iter().map(|m| m.name.as_str()),
    )?;
    let mut models = Vec::with_capacity(raw.model_profiles.len());
    for (i, m) in raw.model_profiles.into_iter().enumerate() {
        let p = format!("system.model_profiles[{i}]");
        if m.hidden_layers == 0 {
            return Err(ConfigError::constraint(
                format!("{p}.hidden_layers"),
                "must be >= 1",
            ));
        }
        positive(&format!("{p}.base_service_time_ms"), m.base_service_time_ms)?;
        let acc = finite(&format!("{p}.accuracy"), m.accuracy)?;
        if !(acc > 0.0 && acc <= 1.0) {
            return Err(ConfigError::constraint(
                format!("{p}.accuracy"),
                format!("must be in (0, 1], got {acc}"),
            ));
        }
        non_negative(
            &format!("{p}.energy_per_inference_j"),
            m.energy_per_inference_j,
        )?;
        models.push(ModelProfile {
            name: m.name,
            hidden_layers: m.hidden_layers,
            base_service_time_ms: m.base_service_time_ms,
            accuracy: m.accuracy,
            energy_per_inference_j: m.energy_per_inference_j,
        });
    }
    check_model_tradeoff(&models)?;

    unique("system.workers", raw.workers.iter().map(|w| w.id.as_str()))?;
    let mut workers = Vec::with_capacity(raw.workers.len());
    for (i, w) in raw.workers.into_iter().enumerate() {
        let p = format!("system.workers[{i}]");
        if !infra.nodes.iter().any(|n| n.id == w.node) {
            return Err(ConfigError::reference(
                format!("{p}.node"),
                format!("unknown node `{}`", w.node),
            ));
        }
        if !models.iter().any(|m| m.name == w.model) {
            return Err(ConfigError::reference(
                format!("{p}.model"),
                format!("unknown model profile `{}`", w.model),
            ));
        }
        if w.replicas == 0 {
            return Err(ConfigError::constraint(
                format!("{p}.replicas"),
                "must be >= 1",
            ));
        }
        if let Some(mem) = w.memory_limit_mb {
            positive(&format!("{p}.memory_limit_mb"), mem)?;
        }
        workers.push(WorkerSpec {
            id: w.id,
            node: w.node,
            model: w.model,
            replicas: w.replicas,
            memory_limit_mb: w.memory_limit_mb,
        });
    }

    let startup = s_to_ms(non_negative(
        "system.worker_startup_delay_s",
        raw.worker_startup_delay_s
            .unwrap_or(ms_to_s(DEFAULT_STARTUP_DELAY_MS)),
    )?);

    Ok(SystemDef {
        workers,
        model_profiles: models,
        broker_per_zone: raw.broker_per_zone.unwrap_or(true),
        worker_startup_delay_ms: startup,
        drain_policy: raw.drain_policy.unwrap_or(DrainPolicy::FinishInFlight),
    })
}

/// Deeper models must be at least as slow and at least as accurate.
fn check_model_tradeoff(models: &[ModelProfile]) -> Result<(), ConfigError> {
    let mut order: Vec<usize> = (0..models.len()).collect();
    order.sort_by_key(|&i| (models[i].hidden_layers, i));
    for pair in order.windows(2) {
        let (shallow, deep) = (&models[pair[0]], &models[pair[1]]);
        if deep.base_service_time_ms < shallow.base_service_time_ms {
            return Err(ConfigError::constraint(
                format!("system.model_profiles[{}].base_service_time_ms", pair[1]),
                format!(
                    "`{}` is deeper than `{}` but faster",
                    deep.name, shallow.name
                ),
            ));
        }
        if deep.accuracy < shallow.accuracy {
            return Err(ConfigError::constraint(
                format!("system.model_profiles[{}].accuracy", pair[1]),
                format!(
                    "`{}` is deeper than `{}` but less accurate",
                    deep.name, shallow.name
                ),
            ));
        }
    }
    Ok(())
}

fn validate_data(raw: RawData, zones: &HashSet<&str>) -> Result<DataDef, ConfigError> {
    let mut producers = Vec::with_capacity(raw.producers.len());
    for (i, p) in raw.producers.into_iter().enumerate() {
        let path = format!("data.producers[{i}]");
        if !zones.contains(p.zone.as_str()) {
            return Err(ConfigError::reference(
                format!("{path}.zone"),
                format!("unknown zone `{}`", p.zone),
            ));
        }
        positive(&format!("{path}.rate_per_s"), p.rate_per_s)?;
        positive(&format!("{path}.message_size_kb"), p.message_size_kb)?;
        producers.push(ProducerSpec {
            zone: p.zone,
            rate_per_s: p.rate_per_s,
            message_size_kb: p.message_size_kb,
        });
    }
    Ok(DataDef {
        producers,
        staleness_deadline_ms: positive("data.staleness_deadline_ms", raw.staleness_deadline_ms)?,
    })
}

fn validate_chaos(i: usize, raw: RawChaos, infra: &InfraDef) -> Result<ChaosDef, ConfigError> {
    let p = format!("chaos[{i}]");
    non_negative(&format!("{p}.start_offset_s"), raw.start_offset_s)?;
    let duration = match raw.duration_s {
        None => ChaosDuration::UntilTeardown,
        Some(RawDuration::Sentinel(s)) if s == UNTIL_TEARDOWN => ChaosDuration::UntilTeardown,
        Some(RawDuration::Sentinel(s)) => {
            return Err(ConfigError::Schema {
                path: format!("{p}.duration_s"),
                message: format!("expected seconds or \"{UNTIL_TEARDOWN}\", got \"{s}\""),
            })
        }
        Some(RawDuration::Seconds(s)) => ChaosDuration::Fixed {
            ms: s_to_ms(non_negative(&format!("{p}.duration_s"), s)?),
        },
    };
    if raw.targets.is_empty() {
        return Err(ConfigError::constraint(
            format!("{p}.targets"),
            "at least one target is required",
        ));
    }

    let kind = match raw.kind {
        RawChaosKind::NetworkDelay => {
            if raw.threads.is_some() {
                return Err(ConfigError::Schema {
                    path: format!("{p}.threads"),
                    message: "`threads` is only valid for cpu_stress".into(),
                });
            }
            let new_latency_ms = raw.new_latency_ms.ok_or_else(|| ConfigError::Schema {
                path: format!("{p}.new_latency_ms"),
                message: "missing field `new_latency_ms`".into(),
            })?;
            non_negative(&format!("{p}.new_latency_ms"), new_latency_ms)?;
            let mut links = Vec::new();
            for (j, t) in raw.targets.into_iter().enumerate() {
                let tp = format!("{p}.targets[{j}]");
                let RawTarget::Link([a, b]) = t else {
                    return Err(ConfigError::Schema {
                        path: tp,
                        message: "network_delay targets are [zone, zone] pairs".into(),
                    });
                };
                if !infra.links.iter().any(|l| l.connects(&a, &b)) {
                    return Err(ConfigError::reference(
                        tp,
                        format!("no link between `{a}` and `{b}`"),
                    ));
                }
                if links
                    .iter()
                    .any(|(x, y): &(String, String)| (x == &a && y == &b) || (x == &b && y == &a))
                {
                    return Err(ConfigError::constraint(tp, "duplicate target"));
                }
                links.push((a, b));
            }
            ChaosKind::NetworkDelay {
                links,
                new_latency_ms,
            }
        }
        RawChaosKind::CpuStress => {
            if raw.new_latency_ms.is_some() {
                return Err(ConfigError::Schema {
                    path: format!("{p}.new_latency_ms"),
                    message: "`new_latency_ms` is only valid for network_delay".into(),
                });
            }
            let threads = raw.threads.ok_or_else(|| ConfigError::Schema {
                path: format!("{p}.threads"),
                message: "missing field `threads`".into(),
            })?;
            if threads == 0 {
                return Err(ConfigError::constraint(
                    format!("{p}.threads"),
                    "must be >= 1",
                ));
            }
            let mut nodes = Vec::new();
            for (j, t) in raw.targets.into_iter().enumerate() {
                let tp = format!("{p}.targets[{j}]");
                let RawTarget::Node(node) = t else {
                    return Err(ConfigError::Schema {
                        path: tp,
                        message: "cpu_stress targets are node ids".into(),
                    });
                };
                if !infra.nodes.iter().any(|n| n.id == node) {
                    return Err(ConfigError::reference(tp, format!("unknown node `{node}`")));
                }
                if nodes.contains(&node) {
                    return Err(ConfigError::constraint(tp, "duplicate target"));
                }
                nodes.push(node);
            }
            ChaosKind::CpuStress { nodes, threads }
        }
    };

    Ok(ChaosDef {
        kind,
        start_offset_ms: s_to_ms(raw.start_offset_s),
        duration,
    })
}

/// Two faults of the same kind may not be active on the same target at once.
fn check_chaos_overlap(chaos: &[ChaosDef], phases: &PhasePlan) -> Result<(), ConfigError> {
    let mut claimed: BTreeMap<String, Vec<(usize, f64, f64)>> = BTreeMap::new();
    for (i, def) in chaos.iter().enumerate() {
        let (start, end) = def.window_ms(phases);
        if end <= start {
            continue;
        }
        let keys: Vec<String> = match &def.kind {
            ChaosKind::NetworkDelay { links, .. } => links
                .iter()
                .map(|(a, b)| {
                    let (x, y) = if a <= b { (a, b) } else { (b, a) };
                    format!("link:{x}|{y}")
                })
                .collect(),
            ChaosKind::CpuStress { nodes, .. } => {
                nodes.iter().map(|n| format!("node:{n}")).collect()
            }
        };
        for key in keys {
            let windows = claimed.entry(key.clone()).or_default();
            if let Some((j, _, _)) = windows.iter().find(|(_, s, e)| start < *e && *s < end) {
                return Err(ConfigError::constraint(
                    format!("chaos[{i}].targets"),
                    format!("overlaps chaos[{j}] on the same target"),
                ));
            }
            windows.push((i, start, end));
        }
    }
    Ok(())
}

fn validate_slos(raw: Vec<RawSlo>) -> Result<Vec<SloSpec>, ConfigError> {
    if raw.is_empty() {
        return Err(ConfigError::constraint(
            "slos",
            "at least one SLO is required",
        ));
    }
    unique("slos", raw.iter().map(|s| s.name.as_str()))?;
    let mut slos = Vec::with_capacity(raw.len());
    for (i, s) in raw.into_iter().enumerate() {
        let p = format!("slos[{i}]");
        let threshold = finite(&format!("{p}.threshold"), s.threshold)?;
        let (sli, threshold) = match s.sli.as_str() {
            "event_time_latency" => (SliKind::EventTimeLatency, threshold),
            "error_rate" => (SliKind::ErrorRate, threshold),
            "energy_per_task" => (SliKind::EnergyPerTask, threshold),
            // Lower-bound objective: flip to its larger-is-worse complement.
            "accuracy" => {
                if !(threshold > 0.0 && threshold < 1.0) {
                    return Err(ConfigError::constraint(
                        format!("{p}.threshold"),
                        "an accuracy threshold must lie in (0, 1)",
                    ));
                }
                (SliKind::ErrorRate, 1.0 - threshold)
            }
            other => {
                return Err(ConfigError::Schema {
                    path: format!("{p}.sli"),
                    message: format!(
                        "unknown SLI `{other}`; expected event_time_latency, error_rate, \
                         accuracy or energy_per_task"
                    ),
                })
            }
        };
        positive(&format!("{p}.threshold"), threshold)?;
        let weight = finite(&format!("{p}.weight"), s.weight)?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(ConfigError::constraint(
                format!("{p}.weight"),
                format!("must be in [0, 1], got {weight}"),
            ));
        }
        slos.push(SloSpec {
            name: s.name,
            sli,
            threshold,
            weight,
            window_ms: s_to_ms(positive(&format!("{p}.window_s"), s.window_s)?),
        });
    }
    let sum: f64 = slos.iter().map(|s| s.weight).sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(ConfigError::constraint(
            "slos.weight",
            format!("weights must sum to 1, got {sum}"),
        ));
    }
    Ok(slos)
}

/// Every zone pair a message or result can travel between needs a link.
fn check_routes(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    let brokers = cfg.broker_zones();
    for (i, p) in cfg.data.producers.iter().enumerate() {
        if let Some(target) = brokers.first().filter(|_| !cfg.system.broker_per_zone) {
            if *target != p.zone && cfg.link_between(&p.zone, target).is_none() {
                return Err(ConfigError::reference(
                    format!("data.producers[{i}].zone"),
                    format!("no link from `{}` to broker zone `{target}`", p.zone),
                ));
            }
        }
    }
    for (i, w) in cfg.system.workers.iter().enumerate() {
        let node = cfg.node(&w.node).expect("worker node validated");
        for zone in cfg.subscriptions_for(node.role, &node.zone) {
            if zone != node.zone && cfg.link_between(&node.zone, &zone).is_none() {
                return Err(ConfigError::reference(
                    format!("system.workers[{i}].node"),
                    format!(
                        "no link between worker zone `{}` and broker zone `{zone}`",
                        node.zone
                    ),
                ));
            }
        }
    }
    Ok(())
}
