//! Simulator for networks of cooperating LMS adaptive filters using the
//! combine-then-adapt diffusion strategy.
//!
//! The usual entry point is a [`scenario::Scenario`], either one of the
//! built-in two-agent experiments or a parsed config file, handed to
//! [`ensemble::run`]. The resulting [`metrics::RunRecord`]s feed the
//! metrics and the claim checks in [`claims`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod claims;
pub mod ensemble;
pub mod error;
pub mod filter;
pub mod metrics;
pub mod network;
pub mod output;
pub mod prng;
pub mod scenario;
pub mod signal;

pub use error::{Error, Result};
