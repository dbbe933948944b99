use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::event::{EventKind, EventQueue, Leg, Phase, SimEvent};
use super::state::*;
use super::time::SimTime;
use crate::chaos::{ChaosController, ChaosError};
use crate::config::{DrainPolicy, NodeRole, ScenarioConfig};
use crate::remediation::Transition;
use crate::slo::{node_power, EnergyLedger};

/// Simulator bug: the world reached a state that must be impossible.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimFault {
    #[error("event at {event} precedes the clock at {clock}")]
    ClockBackwards { clock: SimTime, event: SimTime },
    #[error("conservation violated at {at}: {ledger:?}")]
    Conservation {
        at: SimTime,
        ledger: ConservationLedger,
    },
    #[error("chaos scheduling fault: {0}")]
    Chaos(#[from] ChaosError),
    #[error("no route between zones `{from}` and `{to}`")]
    NoRoute { from: String, to: String },
    #[error("{pod} received {event} without a job in the matching stage")]
    JobStage { pod: PodId, event: &'static str },
}

/// One line of the debugging event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub time_ms: f64,
    pub kind: &'static str,
    pub payload: Value,
}

/// Hooks for the periodic ticks that other layers react to.
pub trait TickHandler {
    fn on_sample_tick(&mut self, _world: &World, _t: SimTime) -> Result<(), SimFault> {
        Ok(())
    }

    fn on_remediator_tick(&mut self, _world: &mut World, _t: SimTime) -> Result<(), SimFault> {
        Ok(())
    }
}

/// Ignores every tick.
pub struct NoTicks;

impl TickHandler for NoTicks {}

#[derive(Debug, Clone)]
struct Producer {
    zone: usize,
    broker: usize,
    interval: SimTime,
    size_kb: f64,
}

/// A simulated cluster plus its pending events.
#[derive(Debug, Clone)]
pub struct World {
    pub cfg: ScenarioConfig,
    pub state: ClusterState,
    pub queue: EventQueue,
    pub phase: Phase,
    pub chaos: ChaosController,
    pub transitions: Vec<Transition>,
    producers: Vec<Producer>,
    draw_rng: ChaCha8Rng,
    log: Vec<EventRecord>,
    next_msg_id: u64,
    eval_start: SimTime,
    eval_end: SimTime,
    end: SimTime,
}

/// Everything a finished run leaves behind.
#[derive(Debug, Clone)]
pub struct FinishedRun {
    pub state: ClusterState,
    pub events: Vec<EventRecord>,
    pub transitions: Vec<Transition>,
}

/// Mixes the run seed into the producer-phase stream.
const PHASE_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Places workers, brokers and producers and schedules every timed event.
///
/// Initial worker replicas are accepting from time zero.
pub fn build_world(cfg: &ScenarioConfig) -> World {
    let zones = cfg.infrastructure.zones.clone();
    let zone_idx = |name: &str| {
        zones
            .iter()
            .position(|z| z == name)
            .expect("zone validated")
    };

    let nodes: Vec<NodeState> = cfg
        .infrastructure
        .nodes
        .iter()
        .map(|n| NodeState {
            id: n.id.clone(),
            zone: zone_idx(&n.zone),
            role: n.role,
            cpu_cores: n.cpu_cores,
            idle_power_w: n.idle_power_w,
            max_power_w: n.max_power_w,
            stress_threads: 0,
        })
        .collect();
    let links = cfg
        .infrastructure
        .links
        .iter()
        .map(|l| LinkState {
            zone_a: zone_idx(&l.a),
            zone_b: zone_idx(&l.b),
            latency_ms: l.latency_ms,
            bandwidth_mbps: l.bandwidth_mbps,
        })
        .collect();
    let brokers: Vec<Broker> = cfg
        .broker_zones()
        .iter()
        .map(|z| Broker::new(zone_idx(z)))
        .collect();

    let idle_power: Vec<f64> = nodes.iter().map(|n| n.idle_power_w).collect();
    let mut state = ClusterState {
        clock: SimTime::ZERO,
        zones: zones.clone(),
        nodes,
        links,
        brokers,
        workers: Vec::new(),
        pods: Vec::new(),
        models: cfg.system.model_profiles.clone(),
        results: Vec::new(),
        produced: 0,
        dropped: 0,
        in_transit: 0,
        intra_zone_latency_ms: cfg.infrastructure.intra_zone_latency_ms,
        energy: EnergyLedger::new(idle_power),
    };

    for spec in &cfg.system.workers {
        let node = state.node_index(&spec.node).expect("node validated");
        let model = state.model_index(&spec.model).expect("model validated");
        let worker = state.workers.len();
        state.workers.push(WorkerState {
            id: spec.id.clone(),
            node,
            model,
            replicas: spec.replicas,
            generation: 0,
            pods: Vec::new(),
            transition: None,
        });
        for _ in 0..spec.replicas {
            let pod = new_pod(&mut state, worker, node, model, PodState::Accepting, None);
            state.pod_mut(pod).accepting_at = Some(SimTime::ZERO);
        }
    }

    let phases = &cfg.phases;
    let eval_start = SimTime::from_ms(phases.evaluation_start_ms());
    let eval_end = SimTime::from_ms(phases.evaluation_end_ms());
    let end = SimTime::from_ms(phases.total_ms());

    let mut queue = EventQueue::new();
    queue.schedule(eval_start, EventKind::PhaseBoundary(Phase::Evaluation));
    queue.schedule(eval_end, EventKind::PhaseBoundary(Phase::Teardown));
    for (i, def) in cfg.chaos.iter().enumerate() {
        let (start, stop) = def.window_ms(phases);
        let (start, stop) = (SimTime::from_ms(start), SimTime::from_ms(stop));
        // Zero-length windows never touch the world.
        if stop > start {
            queue.schedule(start, EventKind::ChaosStart { chaos: i });
            queue.schedule(stop, EventKind::ChaosEnd { chaos: i });
        }
    }
    for t in sample_ticks(eval_start, SimTime::from_ms(cfg.sample_interval_ms), end) {
        queue.schedule(t, EventKind::SampleTick);
    }
    let period = SimTime::from_ms(
        cfg.remediator
            .as_ref()
            .map(|r| r.period_ms)
            .unwrap_or(crate::config::DEFAULT_REMEDIATOR_PERIOD_MS),
    );
    let mut t = eval_start;
    while t < eval_end {
        queue.schedule(t, EventKind::RemediatorTick);
        t = t + period;
    }
    queue.schedule(end, EventKind::PhaseBoundary(Phase::Finished));

    let broker_zones: Vec<usize> = state.brokers.iter().map(|b| b.zone).collect();
    let mut phase_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ PHASE_STREAM);
    let mut producers = Vec::with_capacity(cfg.data.producers.len());
    for (i, p) in cfg.data.producers.iter().enumerate() {
        let zone = zone_idx(&p.zone);
        let broker = if cfg.system.broker_per_zone {
            broker_zones
                .iter()
                .position(|&z| z == zone)
                .expect("producer zone hosts a broker")
        } else {
            0
        };
        let interval = SimTime::from_ms(1000.0 / p.rate_per_s).max(SimTime::from_micros(1));
        let offset = phase_rng.random_range(0..interval.as_micros());
        producers.push(Producer {
            zone,
            broker,
            interval,
            size_kb: p.message_size_kb,
        });
        let first = SimTime::from_micros(offset);
        if first < eval_end {
            queue.schedule(first, EventKind::Produce { producer: i });
        }
    }

    let mut world = World {
        cfg: cfg.clone(),
        state,
        queue,
        phase: Phase::Warmup,
        chaos: ChaosController::new(),
        transitions: Vec::new(),
        producers,
        draw_rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        log: Vec::new(),
        next_msg_id: 0,
        eval_start,
        eval_end,
        end,
    };
    world.refresh_power();
    world
}

/// Tick instants aligned on the start of the evaluation phase, within `(0, end]`.
fn sample_ticks(anchor: SimTime, interval: SimTime, end: SimTime) -> Vec<SimTime> {
    let step = interval.as_micros().max(1);
    let a = anchor.as_micros();
    let first = a % step;
    let first = if first == 0 { step } else { first };
    (0..)
        .map(|k| first + k * step)
        .take_while(|&t| t <= end.as_micros())
        .map(SimTime::from_micros)
        .collect()
}

fn new_pod(
    state: &mut ClusterState,
    worker: usize,
    node: usize,
    model: usize,
    pod_state: PodState,
    transition: Option<usize>,
) -> PodId {
    let id = PodId(state.pods.len());
    let w = &state.workers[worker];
    let replica = w.pods.len();
    let label = format!("{}#{}.{}", w.id, w.generation, replica);
    let n = &state.nodes[node];
    let subscriptions = subscriptions(state, n.role, n.zone);
    state.pods.push(Pod {
        id,
        label,
        worker,
        generation: w.generation,
        node,
        model,
        state: pod_state,
        job: None,
        token: 0,
        subscriptions,
        created_at: state.clock,
        accepting_at: None,
        stopped_at: None,
        transition,
    });
    state.workers[worker].pods.push(id);
    id
}

/// Edge replicas consume their zone's broker; cloud replicas consume all.
fn subscriptions(state: &ClusterState, role: NodeRole, zone: usize) -> Vec<usize> {
    state
        .brokers
        .iter()
        .enumerate()
        .filter(|(_, b)| role == NodeRole::Cloud || b.zone == zone)
        .map(|(i, _)| i)
        .collect()
}

impl World {
    pub fn clock(&self) -> SimTime {
        self.state.clock
    }

    pub fn evaluation_window(&self) -> (SimTime, SimTime) {
        (self.eval_start, self.eval_end)
    }

    pub fn end_time(&self) -> SimTime {
        self.end
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.log
    }

    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Finished
    }

    pub(crate) fn record(&mut self, kind: &'static str, payload: Value) {
        self.log.push(EventRecord {
            time_ms: self.state.clock.as_ms(),
            kind,
            payload,
        });
    }

    /// Pops and executes the next event; `Ok(false)` once the run is over.
    pub fn advance(&mut self, handler: &mut dyn TickHandler) -> Result<bool, SimFault> {
        if self.is_finished() {
            return Ok(false);
        }
        match self.queue.pop() {
            Some(ev) => {
                self.step(ev, handler)?;
                Ok(!self.is_finished())
            }
            None => Ok(false),
        }
    }

    /// Executes one event at its timestamp.
    pub fn step(&mut self, ev: SimEvent, handler: &mut dyn TickHandler) -> Result<(), SimFault> {
        if ev.time < self.state.clock {
            return Err(SimFault::ClockBackwards {
                clock: self.state.clock,
                event: ev.time,
            });
        }
        self.state.energy.advance(ev.time);
        self.state.clock = ev.time;
        let t = ev.time;
        let name = ev.kind.name();

        match ev.kind {
            EventKind::Produce { producer } => self.on_produce(producer)?,
            EventKind::TransitArrive(leg) => self.on_transit(leg)?,
            EventKind::ServiceComplete { pod, token } => self.on_service_complete(pod, token)?,
            EventKind::SampleTick => {
                let ledger = self.state.conservation();
                if !ledger.holds() {
                    return Err(SimFault::Conservation { at: t, ledger });
                }
                self.record(name, json!({}));
                handler.on_sample_tick(self, t)?;
            }
            EventKind::ChaosStart { chaos } => {
                let def = self.cfg.chaos[chaos].clone();
                self.chaos.apply(&mut self.state, chaos, &def)?;
                self.record(name, json!({"chaos": chaos, "kind": def.kind.name()}));
            }
            EventKind::ChaosEnd { chaos } => {
                self.chaos.revert(&mut self.state, chaos)?;
                self.record(name, json!({"chaos": chaos}));
            }
            EventKind::RemediatorTick => {
                self.record(name, json!({}));
                handler.on_remediator_tick(self, t)?;
            }
            EventKind::WorkerStateChange { pod } => self.on_pod_ready(pod),
            EventKind::PhaseBoundary(phase) => {
                self.phase = phase;
                self.record(name, json!({"phase": phase.as_str()}));
                if phase == Phase::Finished {
                    self.finalize();
                }
            }
        }

        if !self.is_finished() {
            self.dispatch_idle()?;
        }
        self.refresh_power();
        Ok(())
    }

    /// Processes events until the end of the tear-down phase.
    pub fn run(&mut self, handler: &mut dyn TickHandler) -> Result<(), SimFault> {
        while self.advance(handler)? {}
        if !self.is_finished() {
            // Queue exhausted early; close out at the scheduled end.
            self.state.energy.advance(self.end);
            self.state.clock = self.end;
            self.phase = Phase::Finished;
            self.finalize();
        }
        Ok(())
    }

    pub fn into_finished(self) -> FinishedRun {
        FinishedRun {
            state: self.state,
            events: self.log,
            transitions: self.transitions,
        }
    }

    fn on_produce(&mut self, producer: usize) -> Result<(), SimFault> {
        let p = self.producers[producer].clone();
        let t = self.state.clock;
        let msg = Message {
            id: self.next_msg_id,
            produced_at: t,
            origin_zone: p.zone,
            size_kb: p.size_kb,
            correctness_draw: self.draw_rng.random::<f64>(),
            broker_arrival: SimTime::ZERO,
        };
        self.next_msg_id += 1;
        self.state.produced += 1;
        self.state.in_transit += 1;
        let broker_zone = self.state.brokers[p.broker].zone;
        let delay = self.route(p.zone, broker_zone, p.size_kb)?;
        self.record("produce", json!({"msg": msg.id, "producer": producer}));
        self.queue.schedule(
            t + delay,
            EventKind::TransitArrive(Leg::ToBroker {
                broker: p.broker,
                msg,
            }),
        );
        let next = t + p.interval;
        if next < self.eval_end {
            self.queue.schedule(next, EventKind::Produce { producer });
        }
        Ok(())
    }

    fn on_transit(&mut self, leg: Leg) -> Result<(), SimFault> {
        let t = self.state.clock;
        match leg {
            Leg::ToBroker { broker, mut msg } => {
                self.state.in_transit -= 1;
                msg.broker_arrival = t;
                self.record("transit_arrive", json!({"msg": msg.id, "broker": broker}));
                self.state.brokers[broker].enqueue(msg);
            }
            Leg::ToWorker { pod, token } => {
                if self.state.pod(pod).token != token {
                    return Ok(());
                }
                let service = self.state.service_time_for(pod);
                let p = self.state.pod_mut(pod);
                let job = p
                    .job
                    .as_mut()
                    .filter(|j| j.stage == JobStage::Fetching)
                    .ok_or(SimFault::JobStage {
                        pod,
                        event: "transit_arrive",
                    })?;
                job.stage = JobStage::InService;
                job.service_start = Some(t);
                let msg_id = job.msg.id;
                self.record(
                    "transit_arrive",
                    json!({"msg": msg_id, "pod": pod.0, "service_ms": service.as_ms()}),
                );
                self.queue
                    .schedule(t + service, EventKind::ServiceComplete { pod, token });
            }
            Leg::ResultToOrigin { pod, token } => {
                if self.state.pod(pod).token != token {
                    return Ok(());
                }
                self.complete_job(pod)?;
            }
        }
        Ok(())
    }

    fn on_service_complete(&mut self, pod: PodId, token: u64) -> Result<(), SimFault> {
        if self.state.pod(pod).token != token {
            return Ok(());
        }
        let t = self.state.clock;
        let p = self.state.pod_mut(pod);
        let job = p
            .job
            .as_mut()
            .filter(|j| j.stage == JobStage::InService)
            .ok_or(SimFault::JobStage {
                pod,
                event: "service_complete",
            })?;
        job.stage = JobStage::Returning;
        job.service_end = Some(t);
        let (msg_id, broker) = (job.msg.id, job.broker);
        let pod_zone = self.state.nodes[self.state.pod(pod).node].zone;
        let broker_zone = self.state.brokers[broker].zone;
        // Results are small; only latency applies on the way back.
        let delay = self.route(pod_zone, broker_zone, 0.0)?;
        self.record("service_complete", json!({"msg": msg_id, "pod": pod.0}));
        self.queue.schedule(
            t + delay,
            EventKind::TransitArrive(Leg::ResultToOrigin { pod, token }),
        );
        Ok(())
    }

    fn complete_job(&mut self, pod: PodId) -> Result<(), SimFault> {
        let t = self.state.clock;
        let deadline = SimTime::from_ms(self.cfg.data.staleness_deadline_ms);
        let p = self.state.pod_mut(pod);
        let job = p
            .job
            .take()
            .filter(|j| j.stage == JobStage::Returning)
            .ok_or(SimFault::JobStage {
                pod,
                event: "transit_arrive",
            })?;
        let (worker, node, model) = (p.worker, p.node, p.model);
        let service_start = job.service_start.expect("service started");
        let service_end = job.service_end.expect("service ended");
        let latency = t - job.msg.produced_at;
        let accuracy = self.state.models[model].accuracy;
        let correct = job.msg.correctness_draw < accuracy && latency <= deadline;
        let queueing = job.dequeued_at - job.msg.broker_arrival;
        let service = service_end - service_start;
        let transit = (job.msg.broker_arrival - job.msg.produced_at)
            + (service_start - job.dequeued_at)
            + (t - service_end);
        self.state.results.push(CompletedResult {
            msg_id: job.msg.id,
            produced_at: job.msg.produced_at,
            completed_at: t,
            correct,
            pod,
            worker,
            node,
            queueing,
            transit,
            service,
        });
        self.record(
            "transit_arrive",
            json!({"msg": job.msg.id, "pod": pod.0, "result": true, "correct": correct}),
        );
        if self.state.pod(pod).state == PodState::Draining {
            self.stop_pod(pod);
        }
        Ok(())
    }

    fn on_pod_ready(&mut self, pod: PodId) {
        let t = self.state.clock;
        let p = self.state.pod_mut(pod);
        if p.state != PodState::Starting {
            return;
        }
        p.state = PodState::Accepting;
        p.accepting_at = Some(t);
        let label = p.label.clone();
        self.record(
            "worker_state_change",
            json!({"pod": pod.0, "label": label, "state": "accepting"}),
        );
        self.check_transitions();
    }

    fn route(&self, from: usize, to: usize, size_kb: f64) -> Result<SimTime, SimFault> {
        self.state
            .route_delay(from, to, size_kb)
            .ok_or_else(|| SimFault::NoRoute {
                from: self.state.zones[from].clone(),
                to: self.state.zones[to].clone(),
            })
    }

    /// Idle accepting replicas pull the oldest message they can see.
    ///
    /// Replicas co-located with a broker they consume go first.
    fn dispatch_idle(&mut self) -> Result<(), SimFault> {
        if self.state.brokers.iter().all(Broker::is_empty) {
            return Ok(());
        }
        let mut order: Vec<(bool, usize)> = self
            .state
            .pods
            .iter()
            .filter(|p| p.state == PodState::Accepting && p.job.is_none())
            .map(|p| {
                let zone = self.state.nodes[p.node].zone;
                let local = p
                    .subscriptions
                    .iter()
                    .any(|&b| self.state.brokers[b].zone == zone);
                (!local, p.id.0)
            })
            .collect();
        order.sort_unstable();
        for (_, idx) in order {
            self.pull(PodId(idx))?;
        }
        Ok(())
    }

    fn pull(&mut self, pod: PodId) -> Result<(), SimFault> {
        let t = self.state.clock;
        let p = self.state.pod(pod);
        let (pod_node, token) = (p.node, p.token);
        let Some(broker) = p
            .subscriptions
            .iter()
            .copied()
            .filter_map(|b| {
                self.state.brokers[b]
                    .head()
                    .map(|m| ((m.produced_at, m.id), b))
            })
            .min()
            .map(|(_, b)| b)
        else {
            return Ok(());
        };
        let msg = self.state.brokers[broker]
            .dequeue()
            .expect("non-empty head");
        let pod_zone = self.state.nodes[pod_node].zone;
        let broker_zone = self.state.brokers[broker].zone;
        let delay = self.route(broker_zone, pod_zone, msg.size_kb)?;
        self.record(
            "dequeue",
            json!({"msg": msg.id, "pod": pod.0, "broker": broker}),
        );
        self.state.pod_mut(pod).job = Some(Job {
            msg,
            broker,
            dequeued_at: t,
            stage: JobStage::Fetching,
            service_start: None,
            service_end: None,
        });
        self.queue.schedule(
            t + delay,
            EventKind::TransitArrive(Leg::ToWorker { pod, token }),
        );
        Ok(())
    }

    fn refresh_power(&mut self) {
        let powers = (0..self.state.nodes.len())
            .map(|i| {
                let n = &self.state.nodes[i];
                node_power(n.idle_power_w, n.max_power_w, self.state.utilization(i))
            })
            .collect();
        self.state.energy.set_power(powers);
    }

    /// Everything still in the system at the end counts as dropped.
    fn finalize(&mut self) {
        let mut dropped = self.state.in_transit;
        self.state.in_transit = 0;
        for b in &mut self.state.brokers {
            dropped += b.drain_all() as u64;
        }
        for p in &mut self.state.pods {
            if p.job.take().is_some() {
                p.token += 1;
                dropped += 1;
            }
        }
        self.state.dropped += dropped;
        self.record("run_end", json!({"dropped_at_end": dropped}));
    }

    // --- reconfiguration primitives used by remediation -------------------

    /// Creates `count` replicas in `starting` state that accept after the
    /// configured startup delay.
    pub(crate) fn spawn_pods(
        &mut self,
        worker: usize,
        node: usize,
        model: usize,
        count: u32,
        transition: Option<usize>,
    ) -> Vec<PodId> {
        let ready = self.state.clock + SimTime::from_ms(self.cfg.system.worker_startup_delay_ms);
        (0..count)
            .map(|_| {
                let pod = new_pod(
                    &mut self.state,
                    worker,
                    node,
                    model,
                    PodState::Starting,
                    transition,
                );
                let label = self.state.pod(pod).label.clone();
                self.record(
                    "worker_state_change",
                    json!({"pod": pod.0, "label": label, "state": "starting"}),
                );
                self.queue
                    .schedule(ready, EventKind::WorkerStateChange { pod });
                pod
            })
            .collect()
    }

    /// Stops a replica from taking new work. With `finish-in-flight` a busy
    /// replica stops once its current result is delivered.
    pub(crate) fn drain_pod(&mut self, pod: PodId) {
        let policy = self.cfg.system.drain_policy;
        let p = self.state.pod_mut(pod);
        if !p.state.is_running() {
            return;
        }
        p.state = PodState::Draining;
        let label = p.label.clone();
        let busy = p.job.is_some();
        self.record(
            "worker_state_change",
            json!({"pod": pod.0, "label": label, "state": "draining"}),
        );
        if busy && policy == DrainPolicy::Drop {
            let p = self.state.pod_mut(pod);
            p.job = None;
            p.token += 1;
            self.state.dropped += 1;
            self.stop_pod(pod);
        } else if !busy {
            self.stop_pod(pod);
        }
    }

    fn stop_pod(&mut self, pod: PodId) {
        let t = self.state.clock;
        let p = self.state.pod_mut(pod);
        p.state = PodState::Stopped;
        p.stopped_at = Some(t);
        let (label, worker) = (p.label.clone(), p.worker);
        self.state.workers[worker].pods.retain(|&x| x != pod);
        self.record(
            "worker_state_change",
            json!({"pod": pod.0, "label": label, "state": "stopped"}),
        );
        self.check_transitions();
    }

    /// Marks transitions whose old replicas stopped and new ones accept.
    pub(crate) fn check_transitions(&mut self) {
        let t = self.state.clock;
        let mut done = Vec::new();
        for (i, tr) in self.transitions.iter_mut().enumerate() {
            if tr.completes_at.is_some() {
                continue;
            }
            let old_done = tr
                .old_pods
                .iter()
                .all(|&p| self.state.pods[p.0].state == PodState::Stopped);
            let new_done = tr
                .new_pods
                .iter()
                .all(|&p| self.state.pods[p.0].state != PodState::Starting);
            if old_done && new_done {
                tr.completes_at = Some(t);
                let w = self
                    .state
                    .worker_index(&tr.worker)
                    .expect("transition worker exists");
                self.state.workers[w].transition = None;
                done.push(i);
            }
        }
        for i in done {
            let worker = self.transitions[i].worker.clone();
            self.record(
                "transition_complete",
                json!({"transition": i, "worker": worker}),
            );
        }
    }
}

/// Runs a freshly built world to the end of its tear-down phase.
pub fn run_to_completion(
    mut world: World,
    handler: &mut dyn TickHandler,
) -> Result<FinishedRun, SimFault> {
    world.run(handler)?;
    Ok(world.into_finished())
}
