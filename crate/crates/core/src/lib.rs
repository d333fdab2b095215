//! Car-following trajectory analytics and adversarial inverse reinforcement
//! learning over a kinematic car-following MDP.
//!
//! Pipeline: [`trajectory`] ingest -> [`extraction`] of labelled CF segments
//! -> [`dtw`] pairing -> [`metrics`] comparison, and [`env`] + [`nn`] +
//! [`airl`] for reward recovery.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod airl;
pub mod dtw;
pub mod env;
pub mod error;
pub mod extraction;
pub mod fixtures;
pub mod metrics;
pub mod nn;
pub mod stats;
pub mod trajectory;

pub use error::{Error, Result};
