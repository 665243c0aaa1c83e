//! Simulation and control of SLA-driven, revenue-maximising service provisioning.
//!
//! A cluster of servers is partitioned into one pool per service class.
//! Sessions of jobs arrive per class and are admitted or rejected by an
//! admission policy; servers are reassigned between pools by an allocation
//! policy. Revenue is charged per completed session net of SLA penalties.

pub mod model;
pub mod policy;
pub mod harness;
pub mod metrics;
pub mod queueing;
pub mod sim;
