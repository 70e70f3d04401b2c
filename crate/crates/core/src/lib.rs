//! Simulator and verification harness for the kindness model: beliefs in
//! `[-1, 1]` on the vertices of a finite connected graph, updated by kind
//! and unkind interactions along rate-one oriented-edge clocks.
//!
//! - [`graph`]: graph construction, edge-list I/O, shortest paths.
//! - [`dynamics`]: configurations, the exact event-driven evolution, stop rules.
//! - [`functionals`]: drifts `rho`/`phi`/`Φ`, the uniform MGF, witness pairs,
//!   and empirical certification of `c_ε`.
//! - [`experiments`]: stopping-time classification, the one-step
//!   enumeration oracle, exit-probability estimates, decay sweeps, fixation.
//! - [`rng`]: the documented seed-derivation scheme.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod format;
pub mod functionals;
pub mod graph;
pub mod rng;

pub use dynamics::{Params, State};
pub use error::{Error, Result};
pub use graph::{Graph, GraphSpec};
