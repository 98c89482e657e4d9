//! No-regret online learning toolkit.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: convex feasible sets (boxes and balls) with Euclidean projection.
//! - [`ocp`]: Greedy Projection and external-regret accounting for quadratic stage losses.
//! - [`ip`]: finite-horizon analysis of convergence with increasing permanence.
//! - [`regression`]: RBF-network online regression driven by Greedy Projection.
//! - [`dynamics`]: disturbed contractions and stable linear recurrences.
//! - [`control`]: learning-based model-reference adaptive control of a pendulum.
//! - [`cli`]: configuration-driven experiment runner and exporters.

pub mod cli;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod geometry;
pub mod ip;
pub mod ocp;
pub mod regression;
pub mod rng;

pub use error::{Error, Result};
pub use geometry::FeasibleSet;
pub use ip::{IpQuery, IpTarget, SequenceTrace};
pub use ocp::{OcpState, RegretLedger};
