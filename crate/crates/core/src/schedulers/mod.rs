//! Message-update schedules.
//!
//! All four schedules start from uniform messages and share the same stopping
//! rules: a run has converged once no pending update is believed to move its
//! message by `tolerance` or more, and is abandoned as diverged once it has
//! computed `max_sweeps` updates per directed edge.

mod ledger;
mod queue;
mod rbp0l;
mod rbp1l;
mod sweep;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::factor_graph::FactorGraph;
use crate::propagation::MessageState;

pub use ledger::ResidualLedger;
pub use queue::IndexedPriorityQueue;
pub use rbp0l::{run_rbp0l, run_rbp0l_from, warm_restart_priorities, Rbp0lStart, Rbp0lStep};
pub use rbp1l::run_rbp1l;
pub use sweep::{run_round_robin, run_synchronous};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("invalid run options: {0}")]
    InvalidOptions(String),
    #[error("graphs differ in variables or factor scopes")]
    StructureMismatch,
    #[error("unknown schedule `{0}` (expected synchronous, round_robin, rbp1l or rbp0l)")]
    UnknownSchedule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Synchronous,
    RoundRobin,
    /// Residual BP with one-step lookahead: every candidate update is
    /// computed to obtain its exact residual.
    Rbp1l,
    /// Residual BP with estimated residuals: priorities are upper bounds
    /// built from the residuals of input messages.
    Rbp0l,
}

impl Schedule {
    pub const ALL: [Schedule; 4] = [
        Schedule::Synchronous,
        Schedule::RoundRobin,
        Schedule::Rbp1l,
        Schedule::Rbp0l,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Schedule::Synchronous => "synchronous",
            Schedule::RoundRobin => "round_robin",
            Schedule::Rbp1l => "rbp1l",
            Schedule::Rbp0l => "rbp0l",
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Schedule {
    type Err = SchedulerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "synchronous" | "sync" => Ok(Schedule::Synchronous),
            "round_robin" | "round-robin" | "roundrobin" => Ok(Schedule::RoundRobin),
            "rbp1l" => Ok(Schedule::Rbp1l),
            "rbp0l" => Ok(Schedule::Rbp0l),
            _ => Err(SchedulerError::UnknownSchedule(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tolerance: f64,
    pub max_sweeps: u64,
    pub damping: f64,
    pub schedule: Schedule,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tolerance: 1e-3,
            max_sweeps: 1000,
            damping: 0.0,
            schedule: Schedule::Rbp0l,
        }
    }
}

impl RunOptions {
    pub fn with_schedule(schedule: Schedule) -> Self {
        RunOptions {
            schedule,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SchedulerError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(SchedulerError::InvalidOptions(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_sweeps == 0 {
            return Err(SchedulerError::InvalidOptions("max_sweeps must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(SchedulerError::InvalidOptions(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        Ok(())
    }

    /// Divergence cutoff on computed updates.
    pub(crate) fn budget(&self, g: &FactorGraph) -> u64 {
        self.max_sweeps.saturating_mul(g.num_edges() as u64)
    }
}

/// Outcome counters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub schedule: Schedule,
    pub converged: bool,
    pub messages_computed: u64,
    pub messages_performed: u64,
    /// Computed updates discarded before being performed (lookahead only).
    pub wasted: u64,
    /// Computed updates still queued when the run stopped (lookahead only).
    pub pending_at_exit: u64,
    pub wall_time: Duration,
    /// Largest pending residual (or residual bound) when the run stopped.
    pub final_max_residual: f64,
    pub num_edges: usize,
    pub seed: Option<u64>,
    pub model: String,
}

impl RunStats {
    pub(crate) fn new(schedule: Schedule, g: &FactorGraph) -> Self {
        RunStats {
            schedule,
            converged: false,
            messages_computed: 0,
            messages_performed: 0,
            wasted: 0,
            pending_at_exit: 0,
            wall_time: Duration::ZERO,
            final_max_residual: 0.0,
            num_edges: g.num_edges(),
            seed: None,
            model: String::new(),
        }
    }

    /// Computed updates per directed edge.
    pub fn sweeps_equivalent(&self) -> f64 {
        if self.num_edges == 0 {
            0.0
        } else {
            self.messages_computed as f64 / self.num_edges as f64
        }
    }

    /// Share of computed updates that were discarded.
    pub fn wasted_fraction(&self) -> f64 {
        if self.messages_computed == 0 {
            0.0
        } else {
            self.wasted as f64 / self.messages_computed as f64
        }
    }

    /// `key=value` lines, one per field, in a fixed order.
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("schedule", self.schedule.to_string()),
            ("model", self.model.clone()),
            ("seed", self.seed.map(|s| s.to_string()).unwrap_or_default()),
            ("converged", self.converged.to_string()),
            ("messages_computed", self.messages_computed.to_string()),
            ("messages_performed", self.messages_performed.to_string()),
            ("wasted", self.wasted.to_string()),
            ("pending_at_exit", self.pending_at_exit.to_string()),
            ("sweeps_equivalent", self.sweeps_equivalent().to_string()),
            ("final_max_residual", self.final_max_residual.to_string()),
            ("wall_time_s", self.wall_time.as_secs_f64().to_string()),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub messages: MessageState,
    pub stats: RunStats,
}

/// Runs the schedule selected in `opts`.
pub fn run(g: &FactorGraph, opts: &RunOptions) -> Result<RunOutcome, SchedulerError> {
    match opts.schedule {
        Schedule::Synchronous => run_synchronous(g, opts),
        Schedule::RoundRobin => run_round_robin(g, opts),
        Schedule::Rbp1l => run_rbp1l(g, opts),
        Schedule::Rbp0l => run_rbp0l(g, opts),
    }
}
