use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::time::SimTime;
use crate::config::{ModelProfile, NodeRole};
use crate::slo::EnergyLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PodId(pub usize);

impl fmt::Display for PodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pod{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    /// Global production sequence number.
    pub id: u64,
    pub produced_at: SimTime,
    pub origin_zone: usize,
    pub size_kb: f64,
    /// Fixed at production; the result is correct when `draw < accuracy`.
    pub correctness_draw: f64,
    pub broker_arrival: SimTime,
}

#[derive(Debug, Clone)]
pub struct Broker {
    pub zone: usize,
    queue: VecDeque<Message>,
    enqueued: u64,
    dequeued: u64,
}

impl Broker {
    pub fn new(zone: usize) -> Self {
        Broker {
            zone,
            queue: VecDeque::new(),
            enqueued: 0,
            dequeued: 0,
        }
    }

    pub fn enqueue(&mut self, msg: Message) {
        self.enqueued += 1;
        self.queue.push_back(msg);
    }

    pub fn dequeue(&mut self) -> Option<Message> {
        let msg = self.queue.pop_front()?;
        self.dequeued += 1;
        Some(msg)
    }

    pub fn head(&self) -> Option<&Message> {
        self.queue.front()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn enqueued(&self) -> u64 {
        self.enqueued
    }

    pub fn dequeued(&self) -> u64 {
        self.dequeued
    }

    pub(crate) fn drain_all(&mut self) -> usize {
        let n = self.queue.len();
        self.queue.clear();
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PodState {
    Starting,
    Accepting,
    Draining,
    Stopped,
}

impl PodState {
    /// Holds a core on its node.
    pub fn is_running(self) -> bool {
        !matches!(self, PodState::Stopped)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PodState::Starting => "starting",
            PodState::Accepting => "accepting",
            PodState::Draining => "draining",
            PodState::Stopped => "stopped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStage {
    Fetching,
    InService,
    Returning,
}

#[derive(Debug, Clone)]
pub struct Job {
    pub msg: Message,
    pub broker: usize,
    pub dequeued_at: SimTime,
    pub stage: JobStage,
    pub service_start: Option<SimTime>,
    pub service_end: Option<SimTime>,
}

/// One replica of a worker.
#[derive(Debug, Clone)]
pub struct Pod {
    pub id: PodId,
    pub label: String,
    pub worker: usize,
    pub generation: u32,
    pub node: usize,
    pub model: usize,
    pub state: PodState,
    pub job: Option<Job>,
    /// Bumped whenever a job is abandoned so stale events are ignored.
    pub token: u64,
    pub subscriptions: Vec<usize>,
    pub created_at: SimTime,
    pub accepting_at: Option<SimTime>,
    pub stopped_at: Option<SimTime>,
    pub transition: Option<usize>,
}

/// A logical worker deployment; its replicas are pods.
#[derive(Debug, Clone)]
pub struct WorkerState {
    pub id: String,
    pub node: usize,
    pub model: usize,
    pub replicas: u32,
    pub generation: u32,
    pub pods: Vec<PodId>,
    pub transition: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: String,
    pub zone: usize,
    pub role: NodeRole,
    pub cpu_cores: f64,
    pub idle_power_w: f64,
    pub max_power_w: f64,
    pub stress_threads: u32,
}

#[derive(Debug, Clone)]
pub struct LinkState {
    pub zone_a: usize,
    pub zone_b: usize,
    pub latency_ms: f64,
    pub bandwidth_mbps: f64,
}

impl LinkState {
    pub fn connects(&self, x: usize, y: usize) -> bool {
        (self.zone_a == x && self.zone_b == y) || (self.zone_a == y && self.zone_b == x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletedResult {
    pub msg_id: u64,
    pub produced_at: SimTime,
    pub completed_at: SimTime,
    pub correct: bool,
    pub pod: PodId,
    pub worker: usize,
    pub node: usize,
    pub queueing: SimTime,
    pub transit: SimTime,
    pub service: SimTime,
}

impl CompletedResult {
    pub fn latency(&self) -> SimTime {
        self.completed_at - self.produced_at
    }
}

/// Where every produced message currently is.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConservationLedger {
    pub produced: u64,
    pub completed: u64,
    pub dropped: u64,
    /// Waiting in a broker queue.
    pub queued: u64,
    /// Travelling from a producer to its broker.
    pub in_transit: u64,
    /// Held by a pod: fetching, in inference or returning the result.
    pub in_service: u64,
}

impl ConservationLedger {
    pub fn holds(&self) -> bool {
        self.produced
            == self.completed + self.dropped + self.queued + self.in_transit + self.in_service
    }
}

/// World state at one simulation instant.
#[derive(Debug, Clone)]
pub struct ClusterState {
    pub clock: SimTime,
    pub zones: Vec<String>,
    pub nodes: Vec<NodeState>,
    pub links: Vec<LinkState>,
    pub brokers: Vec<Broker>,
    pub workers: Vec<WorkerState>,
    pub pods: Vec<Pod>,
    pub models: Vec<ModelProfile>,
    pub results: Vec<CompletedResult>,
    pub produced: u64,
    pub dropped: u64,
    pub in_transit: u64,
    pub intra_zone_latency_ms: f64,
    pub energy: EnergyLedger,
}

/// Fair share of one core for each worker replica on a node.
///
/// `cores` split evenly across running replicas and stress threads, capped at
/// one full core per replica.
pub fn cpu_share(cores: f64, replicas: usize, stress_threads: u32) -> f64 {
    let demand = replicas as f64 + stress_threads as f64;
    if demand <= 0.0 {
        1.0
    } else {
        (cores / demand).min(1.0)
    }
}

/// Inference duration for `model` given the replica's CPU share.
pub fn service_time(model: &ModelProfile, share: f64) -> SimTime {
    SimTime::from_ms(model.base_service_time_ms / share)
}

/// One-way transit across `link` for a message of `size_kb` kilobits.
pub fn transit_delay(link: &LinkState, size_kb: f64) -> SimTime {
    // kb / Mbps = ms
    SimTime::from_ms(link.latency_ms + size_kb / link.bandwidth_mbps)
}

impl ClusterState {
    pub fn zone_index(&self, name: &str) -> Option<usize> {
        self.zones.iter().position(|z| z == name)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn worker_index(&self, id: &str) -> Option<usize> {
        self.workers.iter().position(|w| w.id == id)
    }

    pub fn model_index(&self, name: &str) -> Option<usize> {
        self.models.iter().position(|m| m.name == name)
    }

    pub fn link_between(&self, x: usize, y: usize) -> Option<usize> {
        self.links.iter().position(|l| l.connects(x, y))
    }

    pub fn pod(&self, id: PodId) -> &Pod {
        &self.pods[id.0]
    }

    pub fn pod_mut(&mut self, id: PodId) -> &mut Pod {
        &mut self.pods[id.0]
    }

    pub fn running_pods_on(&self, node: usize) -> usize {
        self.pods
            .iter()
            .filter(|p| p.node == node && p.state.is_running())
            .count()
    }

    pub fn cpu_share(&self, node: usize) -> f64 {
        let n = &self.nodes[node];
        cpu_share(n.cpu_cores, self.running_pods_on(node), n.stress_threads)
    }

    /// Busy fraction of the node's cores, counting stress threads, replicas in
    /// inference and replicas starting up.
    pub fn utilization(&self, node: usize) -> f64 {
        let n = &self.nodes[node];
        let busy = self
            .pods
            .iter()
            .filter(|p| p.node == node)
            .filter(|p| {
                p.state == PodState::Starting
                    || p.job
                        .as_ref()
                        .is_some_and(|j| j.stage == JobStage::InService)
            })
            .count();
        let share = self.cpu_share(node);
        ((busy as f64 + n.stress_threads as f64) * share / n.cpu_cores).min(1.0)
    }

    pub fn service_time_for(&self, pod: PodId) -> SimTime {
        let p = self.pod(pod);
        service_time(&self.models[p.model], self.cpu_share(p.node))
    }

    /// One-way delay between zones; `None` when no link connects them.
    pub fn route_delay(&self, from: usize, to: usize, size_kb: f64) -> Option<SimTime> {
        if from == to {
            return Some(SimTime::from_ms(self.intra_zone_latency_ms));
        }
        self.link_between(from, to)
            .map(|l| transit_delay(&self.links[l], size_kb))
    }

    pub fn conservation(&self) -> ConservationLedger {
        ConservationLedger {
            produced: self.produced,
            completed: self.results.len() as u64,
            dropped: self.dropped,
            queued: self.brokers.iter().map(|b| b.len() as u64).sum(),
            in_transit: self.in_transit,
            in_service: self.pods.iter().filter(|p| p.job.is_some()).count() as u64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(base: f64) -> ModelProfile {
        ModelProfile {
            name: "m".into(),
            hidden_layers: 152,
            base_service_time_ms: base,
            accuracy: 0.783,
            energy_per_inference_j: 0.0,
        }
    }

    #[test]
    fn dedicated_core() {
        assert_eq!(service_time(&model(500.0), 1.0), SimTime::from_ms(500.0));
    }

    #[test]
    fn quarter_share() {
        assert_eq!(service_time(&model(500.0), 0.25), SimTime::from_ms(2000.0));
    }

    #[test]
    fn fair_share_under_stress() {
        // 2 cores shared by 1 replica and 10 stress threads.
        let share = cpu_share(2.0, 1, 10);
        let oracle = 2.0 * 1.0 / (1.0 + 10.0);
        assert!((share - oracle).abs() < 1e-15);
        assert!((share - 0.1818).abs() < 1e-4);
        assert_eq!(service_time(&model(500.0), share), SimTime::from_ms(2750.0));
    }

    #[test]
    fn share_capped_at_one_core() {
        assert_eq!(cpu_share(4.0, 3, 0), 1.0);
        assert_eq!(cpu_share(2.0, 0, 0), 1.0);
    }

    fn link(latency: f64) -> LinkState {
        LinkState {
            zone_a: 0,
            zone_b: 1,
            latency_ms: latency,
            bandwidth_mbps: 100.0,
        }
    }

    #[test]
    fn transit_adds_serialization() {
        // 100 kb over 100 Mbps is 1 ms.
        assert_eq!(transit_delay(&link(50.0), 100.0), SimTime::from_ms(51.0));
        assert_eq!(transit_delay(&link(500.0), 100.0), SimTime::from_ms(501.0));
        assert_eq!(transit_delay(&link(50.0), 0.0), SimTime::from_ms(50.0));
    }

    #[test]
    fn broker_fifo_counters() {
        let mut b = Broker::new(0);
        for id in 0..3 {
            b.enqueue(Message {
                id,
                produced_at: SimTime::from_ms(id as f64),
                origin_zone: 0,
                size_kb: 1.0,
                correctness_draw: 0.5,
                broker_arrival: SimTime::ZERO,
            });
        }
        assert_eq!(b.dequeue().unwrap().id, 0);
        assert_eq!(b.head().unwrap().id, 1);
        assert_eq!((b.enqueued(), b.dequeued(), b.len()), (3, 1, 2));
    }
}
