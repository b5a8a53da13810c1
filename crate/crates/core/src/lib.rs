//! Hidden-action principal-agent analysis with private cost types.
//!
//! An agent with private cost `c` per unit of effort picks the action that
//! maximizes expected payment minus effort cost. The crate computes the
//! allocation rules that arise (welfare, virtual welfare, linear contracts),
//! the revenue and welfare functionals of those rules, distributional
//! condition parameters and the approximation guarantees they imply, and
//! incentive-compatibility checks for menus of contracts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod battery;
pub mod canonical;
pub mod cli;
pub mod conditions;
pub mod incentives;
pub mod instance;
pub mod metrics;
pub mod report;
pub mod scalar;
pub mod typedist;

pub use instance::{BestResponse, EffortOrder, Instance, PaymentProfile, Violation};
pub use scalar::{Real, TwoFloat};
pub use typedist::{DistSpec, IronedVirtualCost, TypeDistribution};
