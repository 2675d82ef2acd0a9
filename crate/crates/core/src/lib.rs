//! Slotted simulation of signalized junction networks with finite queue
//! capacities and blocking, together with per-junction phase controllers:
//! a fixed-cycle baseline, back-pressure with linear pressures, and
//! capacity-aware back-pressure driven by normalized convex pressures.
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`]: static network description, validation and the grid generator.
//! - [`pressure`]: the pressure-function family and its numeric checks.
//! - [`dynamics`]: one simulation slot (blocking flows, arrivals, routing).
//! - [`control`]: controllers and the work-conservation audit.
//! - [`engine`]: the simulation loop, metrics, fixtures and sweeps.
//! - [`scenario`]: the on-disk scenario format.

// Parameter checks are written as `!(x >= 0.0)` on purpose so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod pressure;
pub mod scenario;
pub mod topology;

pub use control::{ControllerConfig, ControllerKind, PhaseDecision};
pub use dynamics::{Mode, QueueState};
pub use engine::{MetricsRow, Scenario, SimulationTrace};
pub use error::{Error, Result};
pub use pressure::{PressureFunction, PressureParams};
pub use topology::{Network, NetworkTopology};
