//! Core algorithms for cooperative, hazard-aware trajectory refinement.
//!
//! Everything in this crate is a pure function over immutable values and
//! builds without `std` (only `alloc` is required). File formats, the
//! scenario generator, the remote planner client and the CLI live in the
//! companion `coplan` crate.
//!
//! The pipeline stages map onto modules as follows:
//!
//! * [`scenario`]: domain types in the roadside-unit frame and constant
//!   velocity kinematics.
//! * [`structuring`]: hazard validation, navigation and history filtering
//!   into a [`structuring::ContextPackage`].
//! * [`bev`]: ego-anchored occupancy rasters, metric/pixel mapping, axis
//!   overlay and max pooling.
//! * [`alignment`]: ego-frame translation, zero-centred time and the
//!   line-oriented prompt grammar with token budgeting.
//! * [`planner`]: the residual planner contract, the null baseline and the
//!   geometric avoidance oracle.
//! * [`rtf`]: residual trajectory fusion.
//! * [`metrics`]: VPQ, mIOU, minADE/minFDE, collision rate, CRR and MCD.
//! * [`sft`]: supervised fine-tuning targets and reasoning traces.
#![cfg_attr(not(feature = "std"), no_std)]
// Validation checks are written as `!(x > 0.0)` on purpose: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod alignment;
pub mod bev;
mod error;
pub mod geom;
pub mod metrics;
pub mod planner;
pub mod rtf;
pub mod scenario;
pub mod sft;
pub mod structuring;

pub use error::{Error, Result};
pub use geom::Vec2;
