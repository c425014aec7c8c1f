//! Fairness-aware scheduling of many customers' tasks on a shared vehicle fleet.
//!
//! Each round, the scheduler searches the convex boundary of per-customer
//! throughput allocations with a weighted vehicle-routing solver, and picks
//! the schedule that maximizes α-fair utility of long-term throughput.

pub mod boundary;
pub mod emulator;
pub mod model;
pub mod oracle;
pub mod scheduler;
pub mod synth;
pub mod utility;
pub mod vrp;
