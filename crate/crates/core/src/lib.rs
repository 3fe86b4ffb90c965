//! Discrete factor-graph belief propagation with pluggable message schedules.
//!
//! The crate is organised bottom-up:
//!
//! * [`factor_graph`] holds the model (variables, positive factor tables, the
//!   dense directed-edge numbering), the model text format and the random
//!   Potts-grid generator.
//! * [`propagation`] stores log-domain messages and implements the
//!   sum-product update, beliefs, the Bethe approximation and the message
//!   distance metrics (residual, dynamic range, KL).
//! * [`schedulers`] drives the updates: synchronous, round-robin, residual BP
//!   with one-step lookahead (`rbp1l`) and residual BP with estimated
//!   residuals (`rbp0l`).
//! * [`exact`] provides ground truth by enumeration and variable elimination.
//! * [`experiments`] runs the grid benchmark and the error-metric trace and
//!   writes their CSV output.

pub mod exact;
pub mod experiments;
pub mod factor_graph;
pub mod propagation;
pub mod schedulers;

pub use exact::{ExactError, ExactResult};
pub use factor_graph::{EdgeId, Factor, FactorGraph, GraphError, Node, VariableSpec};
pub use propagation::{Belief, ErrorMetrics, MessageState, Propagator};
pub use schedulers::{RunOptions, RunOutcome, RunStats, Schedule};
