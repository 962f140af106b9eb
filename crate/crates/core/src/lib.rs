//! Routing core: learned delivery-time estimates, optional in-network
//! reduction of payloads, battery-aware weighting, and a deterministic
//! event-driven network simulator built on top of them.
#![no_std]

extern crate alloc;

pub mod compute;
pub mod energy;
pub mod metrics;
pub mod qpolicy;
pub mod sim;
pub mod types;

pub use compute::{ComputeError, ComputeQueue, ReductionSpec, ServiceModel};
pub use energy::{BatteryState, EnergyError, LinkEnergyParams};
pub use metrics::{AuditReport, TraceSet};
pub use qpolicy::{PolicyError, PolicyKind, QParams, QTable, StaticRoutes};
pub use sim::{run, Scenario, ScenarioError, Simulation};
pub use types::{Action, Message, MessageId, NodeId, SimTime, Topology, TopologyError};
