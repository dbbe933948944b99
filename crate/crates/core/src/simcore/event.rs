use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::state::{Message, PodId};
use super::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Warmup,
    Evaluation,
    Teardown,
    Finished,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Warmup => "warmup",
            Phase::Evaluation => "evaluation",
            Phase::Teardown => "teardown",
            Phase::Finished => "finished",
        }
    }
}

/// Journey legs of a message through the network.
#[derive(Debug, Clone, PartialEq)]
pub enum Leg {
    /// Producer to its broker.
    ToBroker { broker: usize, msg: Message },
    /// Broker to the pod that pulled the message.
    ToWorker { pod: PodId, token: u64 },
    /// Result from the pod back to the originating broker.
    ResultToOrigin { pod: PodId, token: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Produce { producer: usize },
    TransitArrive(Leg),
    ServiceComplete { pod: PodId, token: u64 },
    SampleTick,
    ChaosStart { chaos: usize },
    ChaosEnd { chaos: usize },
    RemediatorTick,
    WorkerStateChange { pod: PodId },
    PhaseBoundary(Phase),
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Produce { .. } => "produce",
            EventKind::TransitArrive(_) => "transit_arrive",
            EventKind::ServiceComplete { .. } => "service_complete",
            EventKind::SampleTick => "sample_tick",
            EventKind::ChaosStart { .. } => "chaos_start",
            EventKind::ChaosEnd { .. } => "chaos_end",
            EventKind::RemediatorTick => "remediator_tick",
            EventKind::WorkerStateChange { .. } => "worker_state_change",
            EventKind::PhaseBoundary(_) => "phase_boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub time: SimTime,
    /// Insertion sequence; breaks ties between events at the same instant.
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap.
        other
            .time
            .cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Pending events ordered by `(time, insertion sequence)`.
#[derive(Debug, Default, Clone)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, time: SimTime, kind: EventKind) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(SimEvent { time, seq, kind });
        seq
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Pending events in execution order.
    pub fn to_sorted_vec(&self) -> Vec<SimEvent> {
        let mut v: Vec<SimEvent> = self.heap.clone().into_vec();
        v.sort_by(|a, b| b.cmp(a));
        v
    }
}
