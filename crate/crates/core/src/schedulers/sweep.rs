//! Static schedules: synchronous and round-robin sweeps.

use std::time::Instant;

use super::{RunOptions, RunOutcome, RunStats, Schedule, SchedulerError};
use crate::factor_graph::FactorGraph;
use crate::propagation::{residual, Propagator};

/// Computes every update from the frozen state, then performs them all.
/// Converged when the largest performed residual of an iteration is below
/// the tolerance.
pub fn run_synchronous(g: &FactorGraph, opts: &RunOptions) -> Result<RunOutcome, SchedulerError> {
    opts.validate()?;
    let start = Instant::now();
    let prop = Propagator::new(g);
    let mut msgs = prop.init_uniform();
    let mut stats = RunStats::new(Schedule::Synchronous, g);
    let budget = opts.budget(g);
    let mut pending: Vec<Vec<f64>> = vec![Vec::new(); g.num_edges()];

    loop {
        for (e, slot) in g.edge_ids().zip(pending.iter_mut()) {
            prop.compute_update_into(&msgs, e, slot);
        }
        stats.messages_computed += g.num_edges() as u64;
        let mut max_residual: f64 = 0.0;
        for (e, new) in g.edge_ids().zip(&pending) {
            let old = msgs.get(e).to_vec();
            let stored = msgs.apply_update(e, new, opts.damping);
            max_residual = max_residual.max(residual(&old, stored));
        }
        stats.messages_performed += g.num_edges() as u64;
        stats.final_max_residual = max_residual;
        if max_residual < opts.tolerance {
            stats.converged = true;
            break;
        }
        if stats.messages_computed >= budget {
            break;
        }
    }
    stats.wall_time = start.elapsed();
    Ok(RunOutcome { messages: msgs, stats })
}

/// Sweeps the edges in id order, performing each update as soon as it is
/// computed. Converged when the largest residual within a sweep is below
/// the tolerance.
pub fn run_round_robin(g: &FactorGraph, opts: &RunOptions) -> Result<RunOutcome, SchedulerError> {
    opts.validate()?;
    let start = Instant::now();
    let prop = Propagator::new(g);
    let mut msgs = prop.init_uniform();
    let mut stats = RunStats::new(Schedule::RoundRobin, g);
    let budget = opts.budget(g);
    let mut new = Vec::new();

    loop {
        let mut max_residual: f64 = 0.0;
        for e in g.edge_ids() {
            prop.compute_update_into(&msgs, e, &mut new);
            let old = msgs.get(e).to_vec();
            let stored = msgs.apply_update(e, &new, opts.damping);
            max_residual = max_residual.max(residual(&old, stored));
        }
        stats.messages_computed += g.num_edges() as u64;
        stats.messages_performed += g.num_edges() as u64;
        stats.final_max_residual = max_residual;
        if max_residual < opts.tolerance {
            stats.converged = true;
            break;
        }
        if stats.messages_computed >= budget {
            break;
        }
    }
    stats.wall_time = start.elapsed();
    Ok(RunOutcome { messages: msgs, stats })
}
