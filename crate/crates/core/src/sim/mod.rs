//! Discrete-event simulation of a network of learning routers.

mod engine;
mod event;
mod scenario;

pub use engine::{run, NodeState, Simulation};
pub use event::{Event, EventKind, EventQueue, PingRepeat, Stream};
pub use scenario::{
    BatterySpec, Load, MeasuredStream, MissionClock, ProtocolSpec, Scenario, ScenarioError, Segment, WorkloadSpec,
};
