//! Discrete-event core: time, events, cluster state and the event loop.

mod engine;
mod event;
mod state;
mod time;

pub use engine::{
    build_world, run_to_completion, EventRecord, FinishedRun, NoTicks, SimFault, TickHandler, World,
};
pub use event::{EventKind, EventQueue, Leg, Phase, SimEvent};
pub use state::*;
pub use time::SimTime;
