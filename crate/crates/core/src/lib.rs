// SPDX-License-Identifier: Apache-2.0
//! Netlist camouflaging with constructed wave-pipelining paths.
//!
//! The crate builds two-wave paths into a sequential netlist by removing
//! retimed flip-flops (or duplicating logic when removal is infeasible),
//! verifies their timing and function, and runs attacker models against
//! the result.

pub mod attacks;
pub mod benchmarks;
pub mod config;
pub mod duplication;
pub mod error;
pub mod falsepath;
pub mod milp;
pub mod netlist;
pub mod removal;
pub mod retiming;
pub mod sat;
pub mod simulate;
pub mod timing;
pub mod workflow;

pub use config::TimingConfig;
pub use netlist::{GateKind, Netlist, Signal, Sink};
