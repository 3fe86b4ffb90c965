use std::io::Write;

use serde::Serialize;

use super::ExperimentError;
use crate::factor_graph::{EdgeId, FactorGraph};
use crate::propagation::{ErrorMetrics, MessageState, Propagator};
use crate::schedulers::{run_rbp0l, run_rbp0l_from, Rbp0lStart, RunOptions, Schedule};

pub const TRACE_HEADER: [&str; 13] = [
    "step",
    "edge",
    "r_step",
    "d_step",
    "kl_step",
    "r_prev_conv",
    "r_new_conv",
    "d_prev_conv",
    "d_new_conv",
    "kl_prev_conv",
    "kl_new_conv",
    "bethe_delta",
    "delta_dist",
];

/// Error metrics of one performed update.
///
/// `*_step` compare the message before and after the update, `*_prev_conv`
/// and `*_new_conv` compare the message before and after against its value
/// at convergence. KL always takes the earlier message first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: u64,
    pub edge: usize,
    pub r_step: f64,
    pub d_step: f64,
    pub kl_step: f64,
    pub r_prev_conv: f64,
    pub r_new_conv: f64,
    pub d_prev_conv: f64,
    pub d_new_conv: f64,
    pub kl_prev_conv: f64,
    pub kl_new_conv: f64,
    /// Change in the Bethe estimate of `log Z` caused by this update.
    pub bethe_delta: f64,
    /// `r_new_conv - r_prev_conv`.
    pub delta_dist: f64,
}

/// Per-node terms of the Bethe free energy, updated one message at a time.
struct BetheTerms<'p, 'g> {
    prop: &'p Propagator<'g>,
    factors: Vec<f64>,
    variables: Vec<f64>,
}

impl<'p, 'g> BetheTerms<'p, 'g> {
    fn new(prop: &'p Propagator<'g>, msgs: &MessageState) -> Self {
        let g = prop.graph();
        BetheTerms {
            prop,
            factors: (0..g.num_factors()).map(|a| prop.factor_free_energy(msgs, a)).collect(),
            variables: (0..g.num_variables())
                .map(|i| prop.variable_free_energy(msgs, i))
                .collect(),
        }
    }

    /// Refreshes the one term that depends on `edge` and returns the change
    /// in `log Z_BP`.
    fn update(&mut self, msgs: &MessageState, edge: EdgeId) -> f64 {
        let e = self.prop.graph().edge(edge);
        let (slot, fresh) = if e.is_factor_to_variable() {
            let i = e.variable;
            (&mut self.variables[i], self.prop.variable_free_energy(msgs, i))
        } else {
            let a = e.factor;
            (&mut self.factors[a], self.prop.factor_free_energy(msgs, a))
        };
        let delta = -(fresh - *slot);
        *slot = fresh;
        delta
    }
}

/// Runs rbp0l to convergence, then reruns it from scratch and reports how
/// each performed update moved its message relative to the converged one.
///
/// `opts.schedule` is ignored. Fails with `DidNotConverge` when the first
/// run hits the update cutoff.
pub fn trace_metrics(g: &FactorGraph, opts: &RunOptions) -> Result<Vec<TraceRecord>, ExperimentError> {
    let opts = RunOptions {
        schedule: Schedule::Rbp0l,
        ..*opts
    };
    let reference = run_rbp0l(g, &opts)?;
    if !reference.stats.converged {
        return Err(ExperimentError::DidNotConverge {
            messages_computed: reference.stats.messages_computed,
        });
    }
    let converged = &reference.messages;

    let prop = Propagator::new(g);
    let start = Rbp0lStart::cold(g);
    let mut bethe = BetheTerms::new(&prop, &start.messages);
    let mut records = Vec::with_capacity(reference.stats.messages_performed as usize);
    let rerun = run_rbp0l_from(g, &opts, start, |step| {
        let now = step.messages.get(step.edge);
        let target = converged.get(step.edge);
        let moved = ErrorMetrics::between(step.previous, now);
        let before = ErrorMetrics::between(step.previous, target);
        let after = ErrorMetrics::between(now, target);
        records.push(TraceRecord {
            step: step.step,
            edge: step.edge.index(),
            r_step: moved.residual,
            d_step: moved.dynamic_range,
            kl_step: moved.kl,
            r_prev_conv: before.residual,
            r_new_conv: after.residual,
            d_prev_conv: before.dynamic_range,
            d_new_conv: after.dynamic_range,
            kl_prev_conv: before.kl,
            kl_new_conv: after.kl,
            bethe_delta: bethe.update(step.messages, step.edge),
            delta_dist: after.residual - before.residual,
        });
    })?;
    debug_assert_eq!(rerun.stats.messages_performed, reference.stats.messages_performed);
    debug_assert_eq!(rerun.messages, reference.messages);
    Ok(records)
}

pub fn write_trace_csv<W: Write>(records: &[TraceRecord], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
