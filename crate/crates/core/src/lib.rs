//! Simulation and closed-form analysis of over-the-air federated learning
//! through a reconfigurable intelligent surface with external interference.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod aircomp;
pub mod analysis;
pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod fl;
pub mod harness;
pub mod ris;
pub mod schemes;
pub mod stats;

pub use error::{Error, Result};
