//! Remediator interface, the built-in strategies and the reconfiguration
//! mechanics that turn an action into a transition.
//!
//! Every reconfiguration works the same way: the affected replicas start
//! draining, replacements are created in `starting` state and become
//! accepting after the configured startup delay. Until both sides settle the
//! worker has an open [`Transition`] and further actions on it are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{NodeRole, SliKind};
use crate::simcore::{PodId, PodState, SimTime, World};

/// What a remediator sees at one tick: sampled SLIs and the placement map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub t_ms: f64,
    /// Time since the evaluation phase started.
    pub elapsed_ms: f64,
    /// Latest sample of every SLO.
    pub latest: Vec<SloReading>,
    /// Every sample taken since the previous tick, oldest first.
    pub recent: Vec<SloReading>,
    pub placements: Vec<Placement>,
}

impl Observation {
    pub fn reading(&self, slo: &str) -> Option<&SloReading> {
        self.latest.iter().find(|r| r.slo == slo)
    }

    pub fn placement(&self, worker: &str) -> Option<&Placement> {
        self.placements.iter().find(|p| p.worker == worker)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SloReading {
    pub t_ms: f64,
    pub slo: String,
    pub sli: SliKind,
    pub value: f64,
    pub threshold: f64,
    pub ratio: f64,
    pub compliant: bool,
    pub carried_forward: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placement {
    pub worker: String,
    pub node: String,
    pub model: String,
    pub replicas: u32,
    pub accepting: u32,
    pub starting: u32,
    pub draining: u32,
    pub in_transition: bool,
}

/// One reconfiguration command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RemediationAction {
    Reschedule { worker: String, node: String },
    SetModel { worker: String, model: String },
    Scale { worker: String, delta: i32 },
    NoOp,
}

impl RemediationAction {
    pub fn worker(&self) -> Option<&str> {
        match self {
            RemediationAction::Reschedule { worker, .. }
            | RemediationAction::SetModel { worker, .. }
            | RemediationAction::Scale { worker, .. } => Some(worker),
            RemediationAction::NoOp => None,
        }
    }
}

/// A reconfiguration in progress or completed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub action: RemediationAction,
    pub worker: String,
    pub started_at: SimTime,
    pub completes_at: Option<SimTime>,
    /// Replicas that drain.
    pub old_pods: Vec<PodId>,
    /// Replicas that start.
    pub new_pods: Vec<PodId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("unknown worker `{0}`")]
    UnknownWorker(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown model profile `{0}`")]
    UnknownModel(String),
    #[error("worker `{0}` already has a transition in flight")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
}

/// An action the harness refused to apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedAction {
    pub t_ms: f64,
    pub action: RemediationAction,
    pub reason: String,
}

/// A remediation strategy.
///
/// `decide` runs inside the simulation loop at every remediator tick of the
/// evaluation phase and must depend only on its own state and the
/// observation.
pub trait Remediator: Send {
    fn name(&self) -> &str;

    fn decide(&mut self, obs: &Observation) -> Vec<RemediationAction>;
}

/// Never acts.
#[derive(Debug, Default, Clone)]
pub struct NoOpRemediator;

impl Remediator for NoOpRemediator {
    fn name(&self) -> &str {
        "noop"
    }

    fn decide(&mut self, _obs: &Observation) -> Vec<RemediationAction> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// Seconds after the evaluation phase starts.
    pub at_s: f64,
    #[serde(flatten)]
    pub action: RemediationAction,
}

/// Emits each scripted action at the first tick at or after its time.
#[derive(Debug, Clone)]
pub struct ScriptedRemediator {
    entries: Vec<ScriptEntry>,
    next: usize,
}

impl ScriptedRemediator {
    pub fn new(mut entries: Vec<ScriptEntry>) -> Self {
        entries.sort_by(|a, b| a.at_s.total_cmp(&b.at_s));
        ScriptedRemediator { entries, next: 0 }
    }
}

impl Remediator for ScriptedRemediator {
    fn name(&self) -> &str {
        "scripted"
    }

    fn decide(&mut self, obs: &Observation) -> Vec<RemediationAction> {
        let mut out = Vec::new();
        while let Some(e) = self.entries.get(self.next) {
            // Compare in microseconds so `at_s` lands exactly on tick instants.
            if SimTime::from_secs(e.at_s) > SimTime::from_ms(obs.elapsed_ms) {
                break;
            }
            out.push(e.action.clone());
            self.next += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRule {
    pub slo: String,
    /// Consecutive violating samples needed to fire.
    pub consecutive: u32,
    pub actions: Vec<RemediationAction>,
}

/// Fires each rule's actions once, after `consecutive` violating samples of
/// its SLO in a row.
#[derive(Debug, Clone)]
pub struct ThresholdRemediator {
    rules: Vec<ThresholdRule>,
    streaks: Vec<u32>,
    fired: Vec<bool>,
}

impl ThresholdRemediator {
    pub fn new(rules: Vec<ThresholdRule>) -> Self {
        let n = rules.len();
        ThresholdRemediator {
            rules,
            streaks: vec![0; n],
            fired: vec![false; n],
        }
    }
}

impl Remediator for ThresholdRemediator {
    fn name(&self) -> &str {
        "threshold"
    }

    fn decide(&mut self, obs: &Observation) -> Vec<RemediationAction> {
        let mut out = Vec::new();
        for (i, rule) in self.rules.iter().enumerate() {
            if self.fired[i] {
                continue;
            }
            for r in obs.recent.iter().filter(|r| r.slo == rule.slo) {
                self.streaks[i] = if r.compliant { 0 } else { self.streaks[i] + 1 };
            }
            if self.streaks[i] >= rule.consecutive.max(1) {
                self.fired[i] = true;
                out.extend(rule.actions.iter().cloned());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("unknown strategy `{name}`; available: {}", available.join(", "))]
    Unknown {
        name: String,
        available: Vec<String>,
    },
    #[error("invalid params for strategy `{name}`: {message}")]
    Params { name: String, message: String },
}

pub type StrategyConstructor = fn(&Value) -> Result<Box<dyn Remediator>, String>;

/// Named remediator constructors.
#[derive(Debug, Clone, Default)]
pub struct StrategyRegistry {
    constructors: BTreeMap<String, StrategyConstructor>,
}

impl StrategyRegistry {
    pub fn register(&mut self, name: impl Into<String>, ctor: StrategyConstructor) {
        self.constructors.insert(name.into(), ctor);
    }

    pub fn names(&self) -> Vec<String> {
        self.constructors.keys().cloned().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.constructors.contains_key(name)
    }

    pub fn lookup(&self, name: &str) -> Result<StrategyConstructor, StrategyError> {
        self.constructors
            .get(name)
            .copied()
            .ok_or_else(|| StrategyError::Unknown {
                name: name.to_string(),
                available: self.names(),
            })
    }

    pub fn create(&self, name: &str, params: &Value) -> Result<Box<dyn Remediator>, StrategyError> {
        (self.lookup(name)?)(params).map_err(|message| StrategyError::Params {
            name: name.to_string(),
            message,
        })
    }
}

/// Registry with `noop`, `scripted` and `threshold`.
pub fn builtin_strategies() -> StrategyRegistry {
    let mut reg = StrategyRegistry::default();
    reg.register("noop", |_| Ok(Box::new(NoOpRemediator)));
    reg.register("scripted", |params| {
        let entries: Vec<ScriptEntry> =
            serde_json::from_value(params.clone()).map_err(|e| e.to_string())?;
        if let Some(e) = entries
            .iter()
            .find(|e| !(e.at_s >= 0.0 && e.at_s.is_finite()))
        {
            return Err(format!("at_s must be a finite number >= 0, got {}", e.at_s));
        }
        Ok(Box::new(ScriptedRemediator::new(entries)))
    });
    reg.register("threshold", |params| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Params {
            rules: Vec<ThresholdRule>,
        }
        let p: Params = serde_json::from_value(params.clone()).map_err(|e| e.to_string())?;
        Ok(Box::new(ThresholdRemediator::new(p.rules)))
    });
    reg
}

/// Builds the placement map shown to remediators.
pub fn placements(world: &World) -> Vec<Placement> {
    let s = &world.state;
    s.workers
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let count = |st: PodState| {
                s.pods
                    .iter()
                    .filter(|p| p.worker == i && p.state == st)
                    .count() as u32
            };
            Placement {
                worker: w.id.clone(),
                node: s.nodes[w.node].id.clone(),
                model: s.models[w.model].name.clone(),
                replicas: w.replicas,
                accepting: count(PodState::Accepting),
                starting: count(PodState::Starting),
                draining: count(PodState::Draining),
                in_transition: w.transition.is_some(),
            }
        })
        .collect()
}

/// Applies one action to the world. `Ok(None)` for `NoOp`, otherwise the
/// index of the opened transition.
pub fn apply_action(
    world: &mut World,
    action: &RemediationAction,
) -> Result<Option<usize>, ActionError> {
    let Some(worker_id) = action.worker() else {
        return Ok(None);
    };
    let worker = world
        .state
        .worker_index(worker_id)
        .ok_or_else(|| ActionError::UnknownWorker(worker_id.to_string()))?;
    if world.state.workers[worker].transition.is_some() {
        return Err(ActionError::Conflict(worker_id.to_string()));
    }
    let w = &world.state.workers[worker];
    let (cur_node, cur_model, replicas) = (w.node, w.model, w.replicas);

    let (node, model, drain, spawn) = match action {
        RemediationAction::Reschedule { node, .. } => {
            let target = world
                .state
                .node_index(node)
                .ok_or_else(|| ActionError::UnknownNode(node.clone()))?;
            if target == cur_node {
                return Err(ActionError::Invalid(format!(
                    "worker `{worker_id}` already runs on `{node}`"
                )));
            }
            check_reachable(world, target)?;
            (target, cur_model, running_pods(world, worker), replicas)
        }
        RemediationAction::SetModel { model, .. } => {
            let target = world
                .state
                .model_index(model)
                .ok_or_else(|| ActionError::UnknownModel(model.clone()))?;
            if target == cur_model {
                return Err(ActionError::Invalid(format!(
                    "worker `{worker_id}` already runs `{model}`"
                )));
            }
            (cur_node, target, running_pods(world, worker), replicas)
        }
        RemediationAction::Scale { delta, .. } => {
            if *delta == 0 {
                return Err(ActionError::Invalid("scale by 0 is not an action".into()));
            }
            if *delta > 0 {
                (cur_node, cur_model, Vec::new(), *delta as u32)
            } else {
                let remove = delta.unsigned_abs();
                if remove >= replicas {
                    return Err(ActionError::Invalid(format!(
                        "cannot remove {remove} of {replicas} replicas of `{worker_id}`"
                    )));
                }
                let mut pods = running_pods(world, worker);
                // Idle replicas go first, then the newest.
                pods.sort_by_key(|&p| (world.state.pod(p).job.is_none(), p));
                let drain = pods.split_off(pods.len() - remove as usize);
                (cur_node, cur_model, drain, 0)
            }
        }
        RemediationAction::NoOp => unreachable!("handled above"),
    };

    let idx = world.transitions.len();
    let now = world.clock();
    world.transitions.push(Transition {
        action: action.clone(),
        worker: worker_id.to_string(),
        started_at: now,
        completes_at: None,
        old_pods: drain.clone(),
        new_pods: Vec::new(),
    });
    {
        let w = &mut world.state.workers[worker];
        w.transition = Some(idx);
        if spawn > 0 && !drain.is_empty() {
            w.generation += 1;
        }
        w.node = node;
        w.model = model;
        w.replicas = match action {
            RemediationAction::Scale { delta, .. } => (w.replicas as i64 + *delta as i64) as u32,
            _ => w.replicas,
        };
    }
    world.record(
        "transition_start",
        json!({"transition": idx, "action": action}),
    );
    let new_pods = world.spawn_pods(worker, node, model, spawn, Some(idx));
    world.transitions[idx].new_pods = new_pods;
    for pod in drain {
        world.drain_pod(pod);
    }
    world.check_transitions();
    Ok(Some(idx))
}

fn running_pods(world: &World, worker: usize) -> Vec<PodId> {
    world
        .state
        .pods
        .iter()
        .filter(|p| p.worker == worker && p.state.is_running())
        .map(|p| p.id)
        .collect()
}

/// A replica on `node` must be able to reach every broker it would consume.
fn check_reachable(world: &World, node: usize) -> Result<(), ActionError> {
    let s = &world.state;
    let n = &s.nodes[node];
    let brokers: Vec<usize> = s
        .brokers
        .iter()
        .filter(|b| n.role == NodeRole::Cloud || b.zone == n.zone)
        .map(|b| b.zone)
        .collect();
    if brokers.is_empty() {
        return Err(ActionError::Invalid(format!(
            "node `{}` cannot consume from any broker",
            n.id
        )));
    }
    if let Some(&z) = brokers
        .iter()
        .find(|&&z| z != n.zone && s.link_between(z, n.zone).is_none())
    {
        return Err(ActionError::Invalid(format!(
            "no link between `{}` and broker zone `{}`",
            s.zones[n.zone], s.zones[z]
        )));
    }
    Ok(())
}
