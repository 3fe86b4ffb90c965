//! Residual BP with lookahead one.

use std::time::Instant;

use super::{IndexedPriorityQueue, RunOptions, RunOutcome, RunStats, Schedule, SchedulerError};
use crate::factor_graph::{EdgeId, FactorGraph};
use crate::propagation::{residual, Propagator};

/// Every queued entry is a computed but not yet performed update whose
/// priority is its exact residual against the stored message.
///
/// Popping an edge performs its precomputed value; each dependent is then
/// recomputed and replaces whatever was queued for it. A replaced entry was
/// computed and never performed, and is counted in `wasted`; entries left in
/// the queue at exit are counted in `pending_at_exit`, so
/// `performed + wasted + pending_at_exit == computed`.
///
/// With damping the popped edge keeps a nonzero residual after it is
/// performed, so it is recomputed and requeued as well.
pub fn run_rbp1l(g: &FactorGraph, opts: &RunOptions) -> Result<RunOutcome, SchedulerError> {
    opts.validate()?;
    let start = Instant::now();
    let prop = Propagator::new(g);
    let mut msgs = prop.init_uniform();
    let mut stats = RunStats::new(Schedule::Rbp1l, g);
    let budget = opts.budget(g);

    let mut queue = IndexedPriorityQueue::with_capacity(g.num_edges());
    let mut pending: Vec<Vec<f64>> = vec![Vec::new(); g.num_edges()];
    for e in g.edge_ids() {
        prop.compute_update_into(&msgs, e, &mut pending[e.0]);
        stats.messages_computed += 1;
        queue.insert(e.0, residual(msgs.get(e), &pending[e.0]));
    }

    let mut scratch = Vec::new();
    loop {
        match queue.peek() {
            None => {
                stats.converged = true;
                break;
            }
            Some((_, p)) if p < opts.tolerance => {
                stats.converged = true;
                break;
            }
            _ => {}
        }
        if stats.messages_computed >= budget {
            break;
        }
        let (idx, _) = queue.pop().unwrap();
        let e = EdgeId(idx);
        msgs.apply_update(e, &pending[idx], opts.damping);
        stats.messages_performed += 1;

        if opts.damping > 0.0 {
            prop.compute_update_into(&msgs, e, &mut pending[idx]);
            stats.messages_computed += 1;
            queue.insert(idx, residual(msgs.get(e), &pending[idx]));
        }

        for &dep in g.dependents(e) {
            prop.compute_update_into(&msgs, dep, &mut scratch);
            stats.messages_computed += 1;
            if queue.remove(dep.0).is_some() {
                stats.wasted += 1;
            }
            std::mem::swap(&mut pending[dep.0], &mut scratch);
            queue.insert(dep.0, residual(msgs.get(dep), &pending[dep.0]));
        }
    }

    stats.pending_at_exit = queue.len() as u64;
    stats.final_max_residual = queue.peek().map_or(0.0, |(_, p)| p);
    stats.wall_time = start.elapsed();
    Ok(RunOutcome { messages: msgs, stats })
}
