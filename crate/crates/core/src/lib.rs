//! Self-centering 3-DoF feet locomotion controller.
//!
//! The pipeline turns rudder poses (from a tracker, a pose log, or the
//! simulated spring rig) into rate-limited body-frame velocity commands,
//! drives a simulated omnidirectional base through task arenas, records
//! telemetry, and serves a line protocol for live operation.

pub mod bench;
pub mod config;
pub mod mapping;
pub mod net;
pub mod pipeline;
pub mod pose;
pub mod protocol;
pub mod rig;
pub mod service;
pub mod sim;
pub mod telemetry;
