//! Simulation and control stack for releasing a towed underwater vehicle
//! from a surface vessel.
//!
//! - [`physics`]: towline tension and the wave-surge release criterion.
//! - [`geodesy`]: lat/lon to local tangent-plane coordinates.
//! - [`bus`]: latched in-process publish/subscribe.
//! - [`controller`]: the deployment node that decides when to fire.
//! - [`serial`]: the one-byte command link.
//! - [`actuator`]: pin/hook/tether release state machine with faults.
//! - [`simulator`]: fixed-step mission world, scenarios and telemetry.
//! - [`benchlab`]: bench-rig tether angle geometry.
//! - [`cli`]: the `rm2` command-line tool.

pub mod actuator;
pub mod benchlab;
pub mod bus;
pub mod cli;
pub mod controller;
pub mod geodesy;
pub mod physics;
pub mod serial;
pub mod simulator;

pub use actuator::{Fault, MechState, ReleaseMechanism};
pub use bus::{Bus, Payload, Topic};
pub use controller::{Rm2Node, Rm2Params};
pub use geodesy::{GeoPoint, LocalFrame, LocalPoint};
pub use physics::{TowConfig, WaveField};
pub use simulator::{run, Scenario, SimConfig, World};
