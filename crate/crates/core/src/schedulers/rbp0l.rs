//! Residual BP with estimated residuals (lookahead zero).
//!
//! No update is computed unless it is about to be performed. The priority of
//! an edge `c -> d` is an upper bound on its residual: the residuals of the
//! input messages `b -> c` accumulated since `c -> d` was last performed,
//! plus a source term for factor-table changes the stored message has not
//! yet seen. A cold start treats the uniform initial messages as the fixed
//! point of an all-uniform model whose factors were then changed to the real
//! ones, so each factor-source edge starts with the normalized
//! uniform-deviation bound of its factor and each variable-source edge
//! starts at 0.

use std::time::Instant;

use super::{IndexedPriorityQueue, ResidualLedger, RunOptions, RunOutcome, RunStats, Schedule, SchedulerError};
use crate::factor_graph::{EdgeId, FactorGraph, Node};
use crate::propagation::{normalized_factor_change_bound, residual, MessageState, Propagator};

/// Starting messages and per-edge source terms for an estimated-residual run.
#[derive(Debug, Clone)]
pub struct Rbp0lStart {
    pub messages: MessageState,
    pub source_terms: Vec<f64>,
}

impl Rbp0lStart {
    /// Uniform messages with uniform-deviation source terms.
    pub fn cold(g: &FactorGraph) -> Self {
        let prop = Propagator::new(g);
        Rbp0lStart {
            messages: prop.init_uniform(),
            source_terms: prop.initial_priorities(),
        }
    }

    /// Initial queue priority of every edge.
    pub fn priorities(&self) -> &[f64] {
        &self.source_terms
    }
}

/// Starting point for re-running inference on `new_g` after the factor
/// tables of `old_g` changed, reusing messages from a finished run on
/// `old_g`.
///
/// Each factor-source edge is primed with the normalized change bound of its
/// factor; every other priority and the ledger start at zero.
pub fn warm_restart_priorities(
    old_g: &FactorGraph,
    new_g: &FactorGraph,
    converged: &MessageState,
) -> Result<Rbp0lStart, SchedulerError> {
    if !old_g.same_structure(new_g) || converged.num_edges() != new_g.num_edges() {
        return Err(SchedulerError::StructureMismatch);
    }
    let per_factor: Vec<f64> = old_g
        .factors()
        .iter()
        .zip(new_g.factors())
        .map(|(old, new)| normalized_factor_change_bound(&old.table, &new.table))
        .collect::<Result<_, _>>()
        .map_err(|_| SchedulerError::StructureMismatch)?;
    let source_terms = new_g
        .edges()
        .iter()
        .map(|edge| match edge.from {
            Node::Variable(_) => 0.0,
            Node::Factor(a) => per_factor[a],
        })
        .collect();
    Ok(Rbp0lStart {
        messages: converged.clone(),
        source_terms,
    })
}

/// One performed update, reported to the observer of [`run_rbp0l_from`].
#[derive(Debug)]
pub struct Rbp0lStep<'a> {
    /// Zero-based index of this update within the run.
    pub step: u64,
    pub edge: EdgeId,
    /// Queue priority the edge was popped with.
    pub priority: f64,
    /// Exact residual of the computed (undamped) update against the stored
    /// message. Never exceeds `priority` when the bound holds.
    pub computed_residual: f64,
    /// Residual of the step actually taken.
    pub performed_residual: f64,
    /// The message before the update.
    pub previous: &'a [f64],
    /// State after the update.
    pub messages: &'a MessageState,
}

pub fn run_rbp0l(g: &FactorGraph, opts: &RunOptions) -> Result<RunOutcome, SchedulerError> {
    run_rbp0l_from(g, opts, Rbp0lStart::cold(g), |_| {})
}

/// Runs the estimated-residual schedule from `start`, calling `observer`
/// after every performed update.
pub fn run_rbp0l_from<F>(
    g: &FactorGraph,
    opts: &RunOptions,
    start: Rbp0lStart,
    mut observer: F,
) -> Result<RunOutcome, SchedulerError>
where
    F: FnMut(&Rbp0lStep<'_>),
{
    opts.validate()?;
    if start.messages.num_edges() != g.num_edges() || start.source_terms.len() != g.num_edges() {
        return Err(SchedulerError::StructureMismatch);
    }
    let clock = Instant::now();
    let prop = Propagator::new(g);
    let mut msgs = start.messages;
    let mut ledger = ResidualLedger::new(g, start.source_terms);
    let mut stats = RunStats::new(Schedule::Rbp0l, g);
    let budget = opts.budget(g);

    let mut queue = IndexedPriorityQueue::with_capacity(g.num_edges());
    for e in g.edge_ids() {
        queue.insert(e.0, ledger.priority(e));
    }

    let mut new = Vec::new();
    let mut touched = Vec::new();
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
        let (idx, priority) = queue.pop().unwrap();
        let e = EdgeId(idx);
        prop.compute_update_into(&msgs, e, &mut new);
        stats.messages_computed += 1;
        let previous = msgs.get(e).to_vec();
        let computed_residual = residual(&previous, &new);
        let stored = msgs.apply_update(e, &new, opts.damping);
        let performed_residual = residual(&previous, stored);
        stats.messages_performed += 1;

        ledger.reset(e);
        if opts.damping > 0.0 {
            let remaining = residual(msgs.get(e), &new);
            if remaining > 0.0 {
                ledger.set_source_term(e, remaining);
                queue.push(idx, ledger.priority(e));
            }
        }

        observer(&Rbp0lStep {
            step: stats.messages_performed - 1,
            edge: e,
            priority,
            computed_residual,
            performed_residual,
            previous: &previous,
            messages: &msgs,
        });

        touched.clear();
        touched.extend(ledger.record(e, performed_residual));
        for &dep in &touched {
            queue.push(dep.0, ledger.priority(dep));
        }
    }

    stats.pending_at_exit = 0;
    stats.final_max_residual = queue.peek().map_or(0.0, |(_, p)| p);
    stats.wall_time = clock.elapsed();
    Ok(RunOutcome { messages: msgs, stats })
}
