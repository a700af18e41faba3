//! Queue-length analysis for M/G/1 queues with one-dependent server
//! vacations, and its use as a marginal approximation for the two-machine,
//! one-repairman layered network.

pub mod dependence;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod quad;
pub mod repair;
pub mod scalar;
pub mod sim;
pub mod vacation;

pub use dist::{fit_two_moment, DistSpec, MomentSummary};
pub use error::{Error, Result};
