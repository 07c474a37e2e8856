//! Host-side tooling around `coplan-core`: scenario files and the synthetic
//! scenario generator, the end-to-end pipeline runner, the remote planner
//! client (with a loopback mock server), batch evaluation, fine-tuning
//! dataset export, plots and latency benchmarks.
//!
//! The `coplan` binary exposes all of it as subcommands.

// Validation checks are written as `!(x > 0.0)` on purpose: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
mod error;
pub mod eval;
pub mod generator;
pub mod mock;
pub mod pgm;
pub mod pipeline;
pub mod plot;
pub mod remote;
pub mod scenario_file;
pub mod sft_io;

pub use coplan_core as core;
pub use error::{Error, Result};
